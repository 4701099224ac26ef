//! Property suites over every built-in system: inequalities between the
//! orbit metrics, and the fast kernels against brute-force enumeration.
//!
//! Each suite draws its inputs from per-(system, n) seeded streams and
//! counts violations; a correct build reports zero.

use fk_core::entropy::{exact_separated, exact_spanning};
use fk_core::matching::{self, PairCosts, Resolution};
use fk_core::{oracle, rng, MetricKind, OrbitSegment, System, SystemSpec};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::CliError;

pub const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Orbit lengths the inequality suites sweep.
pub const LENGTHS: [usize; 3] = [4, 16, 64];

pub const SUITES: [&str; 5] = ["lemma-chain", "orbit-shift", "order-free", "oracle", "sandwich"];

/// Every built-in system with a short label, horizons sized for `n_max`.
pub fn catalog(n_max: usize) -> Vec<(&'static str, System)> {
    let specs = [
        ("full_shift:2", SystemSpec::FullShift { k: 2, horizon: None }),
        ("full_shift:3", SystemSpec::FullShift { k: 3, horizon: None }),
        ("rotation:golden", SystemSpec::Rotation { alpha: GOLDEN }),
        ("doubling", SystemSpec::Doubling { horizon: None }),
        ("tent", SystemSpec::Tent { horizon: None }),
        ("logistic", SystemSpec::Logistic),
        (
            "two_fixed_points",
            SystemSpec::TwoComponent {
                a: Box::new(SystemSpec::Rotation { alpha: 0.0 }),
                b: Box::new(SystemSpec::Rotation { alpha: 0.0 }),
                weight_a: 0.5,
            },
        ),
    ];
    specs
        .into_iter()
        .map(|(name, s)| (name, System::new(s.with_horizon_for(n_max)).expect("built-in system")))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteRow {
    pub system: String,
    /// Orbit length, or the largest length drawn for the randomized-length suites.
    pub n: usize,
    pub checks: usize,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub rows: Vec<SuiteRow>,
    /// Up to a few violating cases, described.
    pub examples: Vec<String>,
}

impl SuiteReport {
    pub fn checks(&self) -> usize {
        self.rows.iter().map(|r| r.checks).sum()
    }

    pub fn violations(&self) -> usize {
        self.rows.iter().map(|r| r.violations).sum()
    }
}

const EXAMPLES: usize = 5;

/// Outcome of one randomized case: number of checks and violation descriptions.
type Case = (usize, Vec<String>);

/// Runs `case` for `trials` independent draws on each system and length.
fn sweep(
    suite: &str,
    lengths: &[usize],
    trials: usize,
    seed: u64,
    case: impl Fn(&System, usize, &mut rng::Rng) -> fk_core::Result<Case> + Sync,
) -> Result<SuiteReport, CliError> {
    let n_max = lengths.iter().copied().max().unwrap_or(1);
    let systems = catalog(n_max);
    let cells: Vec<(usize, usize)> = (0..systems.len()).flat_map(|s| lengths.iter().map(move |&n| (s, n))).collect();
    let results: Vec<(SuiteRow, Vec<String>)> = cells
        .par_iter()
        .map(|&(s, n)| {
            let (name, system) = &systems[s];
            let outcomes: Vec<Case> = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let task = ((s as u64) << 48) ^ ((n as u64) << 24) ^ t as u64;
                    case(system, n, &mut rng::stream(seed, task))
                })
                .collect::<fk_core::Result<_>>()?;
            let checks = outcomes.iter().map(|o| o.0).sum();
            let bad: Vec<String> =
                outcomes.into_iter().flat_map(|o| o.1).map(|v| format!("{name} n={n}: {v}")).collect();
            Ok((SuiteRow { system: name.to_string(), n, checks, violations: bad.len() }, bad))
        })
        .collect::<fk_core::Result<_>>()?;
    let mut report = SuiteReport { suite: suite.to_string(), rows: Vec::new(), examples: Vec::new() };
    for (row, bad) in results {
        report.rows.push(row);
        report.examples.extend(bad.into_iter().take(EXAMPLES.saturating_sub(report.examples.len())));
    }
    Ok(report)
}

fn random_pair(system: &System, n: usize, r: &mut rng::Rng) -> fk_core::Result<(OrbitSegment, OrbitSegment)> {
    let mu = system.sample_points(&system.natural_measure(), 2, r.gen())?;
    Ok((system.orbit(&mu.points[0], n)?, system.orbit(&mu.points[1], n)?))
}

fn check(ok: bool, what: impl FnOnce() -> String, bad: &mut Vec<String>) {
    if !ok {
        bad.push(what());
    }
}

/// `d̄_n ≤ d_n` and `d_FKn ≤ sqrt(d̄_n) + 2·tol`.
pub fn lemma_chain(trials: usize, seed: u64, tol: f64) -> Result<SuiteReport, CliError> {
    sweep("lemma-chain", &LENGTHS, trials, seed, |system, n, r| {
        let (ox, oy) = random_pair(system, n, r)?;
        let c = PairCosts::new(&ox, &oy)?;
        let (bowen, mean, fk) = (c.bowen(), c.mean(), c.fk(Resolution::Bisection(tol)));
        let mut bad = Vec::new();
        check(mean <= bowen, || format!("mean {mean} > bowen {bowen}"), &mut bad);
        check(fk <= mean.sqrt() + 2.0 * tol, || format!("fk {fk} > sqrt(mean {mean})"), &mut bad);
        Ok((2, bad))
    })
}

/// `d_FKn(x, Tx) ≤ 1/n + 2·tol`.
pub fn orbit_shift(trials: usize, seed: u64, tol: f64) -> Result<SuiteReport, CliError> {
    sweep("orbit-shift", &LENGTHS, trials, seed, |system, n, r| {
        let x = system.sample_points(&system.natural_measure(), 1, r.gen())?.points.remove(0);
        let tx = system.apply(&x)?;
        let d = matching::fk_distance(&system.orbit(&x, n)?, &system.orbit(&tx, n)?, tol)?;
        let mut bad = Vec::new();
        check(d <= 1.0 / n as f64 + 2.0 * tol, || format!("d_FK(x, Tx) = {d}"), &mut bad);
        Ok((1, bad))
    })
}

/// `d̃_FKn ≤ sqrt(F_n) + 2·tol`, `F_n ≤ (d̃_FKn + 2·tol)(1 + diameter)` and `d̃_FKn ≤ d_FKn + 2·tol`.
pub fn order_free(trials: usize, seed: u64, tol: f64) -> Result<SuiteReport, CliError> {
    sweep("order-free", &LENGTHS, trials, seed, |system, n, r| {
        let (ox, oy) = random_pair(system, n, r)?;
        let c = PairCosts::new(&ox, &oy)?;
        let free = c.fk_unordered(Resolution::Bisection(tol));
        let fk = c.fk(Resolution::Bisection(tol));
        let weak = c.weak_mean();
        let diam = system.diameter();
        let mut bad = Vec::new();
        check(free <= weak.sqrt() + 2.0 * tol, || format!("free fk {free} > sqrt(F {weak})"), &mut bad);
        check(weak <= (free + 2.0 * tol) * (1.0 + diam), || format!("F {weak} > (free fk {free})(1+diam)"), &mut bad);
        check(free <= fk + 2.0 * tol, || format!("free fk {free} > fk {fk}"), &mut bad);
        Ok((3, bad))
    })
}

/// Fast kernels against exhaustive enumeration on short orbits: ordered
/// matches (`n ≤ 8`), partial bijections and assignments (`n ≤ 7`), with a
/// probe radius that is half the time one of the costs.
pub fn oracle(trials: usize, seed: u64) -> Result<SuiteReport, CliError> {
    sweep("oracle", &[8], trials, seed, |system, _, r| {
        let mut bad = Vec::new();
        let mut checks = 0;
        for (max_n, label) in [(8, "ordered"), (7, "unordered"), (7, "assignment")] {
            let n = r.gen_range(1..=max_n);
            let (ox, oy) = random_pair(system, n, r)?;
            let c = PairCosts::new(&ox, &oy)?;
            let delta =
                if r.gen_bool(0.5) { c.get(r.gen_range(0..n), r.gen_range(0..n)) } else { r.gen_range(0.0..1.1) };
            checks += 1;
            match label {
                "ordered" => {
                    let (fast, slow) = (c.ordered_match_size(delta), oracle::ordered_match_size(&c, delta));
                    check(fast == slow, || format!("ordered match {fast} vs {slow}"), &mut bad);
                    let (fast, slow) = (c.fk(Resolution::Exact), oracle::fk_distance(&c));
                    checks += 1;
                    check((fast - slow).abs() <= 1e-12, || format!("fk {fast} vs {slow}"), &mut bad);
                }
                "unordered" => {
                    let (fast, slow) = (c.unordered_match_size(delta), oracle::unordered_match_size(&c, delta));
                    check(fast == slow, || format!("unordered match {fast} vs {slow}"), &mut bad);
                    let (fast, slow) = (c.fk_unordered(Resolution::Exact), oracle::fk_unordered_distance(&c));
                    checks += 1;
                    check((fast - slow).abs() <= 1e-12, || format!("free fk {fast} vs {slow}"), &mut bad);
                }
                _ => {
                    let (fast, slow) = (c.weak_mean(), oracle::weak_mean(&c));
                    check((fast - slow).abs() <= 1e-12, || format!("assignment {fast} vs {slow}"), &mut bad);
                }
            }
        }
        Ok((checks, bad))
    })
}

/// Exact `sp(ε) ≤ sr(ε) ≤ sp(ε/2)` for FK balls on random samples of at most 12 orbits.
pub fn sandwich(trials: usize, seed: u64) -> Result<SuiteReport, CliError> {
    sweep("sandwich", &[16], trials, seed, |system, max_n, r| {
        let n = r.gen_range(2..=max_n);
        let size = r.gen_range(2..=12);
        let eps = r.gen_range(0.02..0.6);
        let mu = system.sample_points(&system.natural_measure(), size, r.gen())?;
        let sample = system.orbits(&mu, n)?;
        let sp = exact_spanning(&sample, MetricKind::FK, eps)?.count;
        let sr = exact_separated(&sample, MetricKind::FK, eps)?.count;
        let sp_half = exact_spanning(&sample, MetricKind::FK, eps / 2.0)?.count;
        let mut bad = Vec::new();
        check(sp <= sr, || format!("n={n} eps={eps}: sp {sp} > sr {sr}"), &mut bad);
        check(sr <= sp_half, || format!("n={n} eps={eps}: sr {sr} > sp(eps/2) {sp_half}"), &mut bad);
        Ok((2, bad))
    })
}

pub fn run_suite(suite: &str, trials: usize, seed: u64, tol: f64) -> Result<SuiteReport, CliError> {
    match suite {
        "lemma-chain" => lemma_chain(trials, seed, tol),
        "orbit-shift" => orbit_shift(trials, seed, tol),
        "order-free" => order_free(trials, seed, tol),
        "oracle" => oracle(trials, seed),
        "sandwich" => sandwich(trials, seed),
        other => Err(CliError::Config(format!("unknown suite '{other}'; expected one of {}", SUITES.join(", ")))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_are_clean_and_reproducible() {
        for suite in SUITES {
            let a = run_suite(suite, 3, 11, 1e-9).unwrap();
            assert_eq!(a.violations(), 0, "{suite}: {:?}", a.examples);
            assert!(a.checks() > 0);
            assert_eq!(a, run_suite(suite, 3, 11, 1e-9).unwrap());
        }
        assert!(run_suite("nope", 1, 0, 1e-9).is_err());
    }
}
