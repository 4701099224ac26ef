#![allow(dead_code)]

use fk_core::{OrbitSegment, System, SystemSpec};

pub const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// One instance of every built-in system, with horizons long enough for `n_max`.
pub fn catalog(n_max: usize) -> Vec<System> {
    let specs = [
        SystemSpec::FullShift { k: 2, horizon: None },
        SystemSpec::FullShift { k: 3, horizon: None },
        SystemSpec::Rotation { alpha: GOLDEN },
        SystemSpec::Doubling { horizon: None },
        SystemSpec::Tent { horizon: None },
        SystemSpec::Logistic,
        SystemSpec::TwoComponent {
            a: Box::new(SystemSpec::Rotation { alpha: 0.0 }),
            b: Box::new(SystemSpec::Rotation { alpha: 0.0 }),
            weight_a: 0.5,
        },
    ];
    specs.iter().map(|s| System::new(s.with_horizon_for(n_max)).unwrap()).collect()
}

/// `count` independent orbit pairs of length `n` drawn from the system's natural measure.
pub fn orbit_pairs(system: &System, n: usize, count: usize, seed: u64) -> Vec<(OrbitSegment, OrbitSegment)> {
    let mu = system.sample_points(&system.natural_measure(), 2 * count, seed).unwrap();
    mu.points.chunks(2).map(|p| (system.orbit(&p[0], n).unwrap(), system.orbit(&p[1], n).unwrap())).collect()
}
