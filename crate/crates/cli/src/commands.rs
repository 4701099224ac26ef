//! One function per subcommand. Each resolves its configuration, runs the
//! computation and returns the artifact to emit.

use fk_core::criterion::{ergodicity_probe, katok_criterion_check, CriterionReport};
use fk_core::entropy::{
    brin_katok_local_many, complexity_compare, exact_separated, exact_spanning, greedy_separated, greedy_spanning,
    katok_entropy_curve, measure_spanning_orbits, topological_entropy_curve, CurveRow, EntropyCurve, FitWindow,
    GrowthScale, SetKind, TopologicalOptions,
};
use fk_core::matching::{orbit_distance, Resolution};
use fk_core::systems::PartitionKind;
use fk_core::{rng, EmpiricalMeasure, Partition, Point, System};

use crate::config::{Needs, Resolved, RunConfig};
use crate::output::{num, Artifact};
use crate::verify::{run_suite, SuiteReport, SUITES};
use crate::CliError;

pub const COMMANDS: [&str; 10] = [
    "orbit",
    "metric",
    "span",
    "entropy-top",
    "entropy-katok",
    "entropy-brinkatok",
    "complexity",
    "criterion",
    "probe-ergodic",
    "verify",
];

/// What a command produced: an artifact for `--out`/stdout, plus an
/// optional plain summary for stdout.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub artifact: Artifact,
    /// Plain result for stdout. Without `--out` it replaces the artifact on
    /// stdout; with `--out` it is printed after the artifact is written.
    pub summary: Option<String>,
    pub failed: Option<String>,
}

impl Outcome {
    fn artifact(artifact: Artifact) -> Outcome {
        Outcome { artifact, summary: None, failed: None }
    }
}

fn needs(command: &str) -> Needs {
    let all = Needs { system: true, n: true, eps: true, delta: false };
    match command {
        "orbit" | "metric" | "probe-ergodic" => Needs { eps: false, ..all },
        "entropy-brinkatok" => Needs { eps: false, delta: true, ..all },
        "verify" => Needs::default(),
        _ => all,
    }
}

pub fn run(command: &str, config: RunConfig) -> Result<Outcome, CliError> {
    if !COMMANDS.contains(&command) {
        return Err(CliError::Config(format!("unknown command '{command}'")));
    }
    let mut r = config.resolve(command, needs(command))?;
    match command {
        "orbit" => orbit(&mut r),
        "metric" => metric(&mut r),
        "span" => span(&mut r),
        "entropy-top" => entropy_top(&mut r),
        "entropy-katok" => entropy_katok(&mut r),
        "entropy-brinkatok" => entropy_brinkatok(&mut r),
        "complexity" => complexity(&mut r),
        "criterion" => criterion(&mut r),
        "probe-ergodic" => probe(&mut r),
        "verify" => verify(&mut r),
        _ => unreachable!(),
    }
}

fn required<'a>(value: &'a Option<String>, flag: &str, command: &str) -> Result<&'a str, CliError> {
    value.as_deref().ok_or_else(|| CliError::Config(format!("{command} needs --{flag}")))
}

fn single_n(r: &Resolved, command: &str) -> Result<usize, CliError> {
    match r.n() {
        [n] => Ok(*n),
        _ => Err(CliError::Config(format!("{command} takes a single --n"))),
    }
}

fn describe(point: &Point) -> String {
    match point {
        Point::Symbols(s) => s.iter().take(32).map(|c| char::from(b'0' + c)).collect(),
        Point::Component { index, inner } => format!("{}:{}", if *index == 0 { 'a' } else { 'b' }, describe(inner)),
        other => num(other.coordinate().expect("real-valued point")),
    }
}

fn orbit(r: &mut Resolved) -> Result<Outcome, CliError> {
    let n = single_n(r, "orbit")?;
    let x = r.point(required(&r.config.x, "x", "orbit")?)?;
    let o = r.system().orbit(&x, n)?;
    let mut a = Artifact::new("orbit", &r.config);
    a.line("i,point");
    for (i, p) in o.points().enumerate() {
        a.row(&[i.to_string(), describe(&p)]);
    }
    Ok(Outcome::artifact(a))
}

fn metric(r: &mut Resolved) -> Result<Outcome, CliError> {
    let kind = r.kind();
    let tol = r.tol();
    let x = r.point(required(&r.config.x, "x", "metric")?)?;
    let y = r.point(required(&r.config.y, "y", "metric")?)?;
    let mut a = Artifact::new("metric", &r.config);
    a.line("metric,n,value");
    let mut values = Vec::new();
    for &n in r.n() {
        let (ox, oy) = (r.system().orbit(&x, n)?, r.system().orbit(&y, n)?);
        let d = orbit_distance(kind, &ox, &oy, Resolution::Bisection(tol))?;
        a.row(&[kind.to_string(), n.to_string(), num(d)]);
        values.push(num(d));
    }
    Ok(Outcome { artifact: a, summary: Some(values.join("\n")), failed: None })
}

fn span(r: &mut Resolved) -> Result<Outcome, CliError> {
    let kind = r.kind();
    let size = Resolved::get_or(&mut r.config.sample_size, 1000);
    let set = Resolved::get_or(&mut r.config.set, SetKind::Separated);
    let exact = Resolved::get_or(&mut r.config.exact, false);
    let natural = r.system().natural_measure();
    let sampler = Resolved::get_or(&mut r.config.sampler, natural);
    let points = r.system().sample_points(&sampler, size, r.seed())?;
    let mut a = Artifact::new("span", &r.config);
    a.line("metric,n,epsilon,count,exact");
    for &n in r.n() {
        let orbits = r.system().orbits(&points, n)?;
        for &eps in r.eps() {
            let result = match (set, exact) {
                (SetKind::Spanning, false) => greedy_spanning(&orbits, kind, eps)?,
                (SetKind::Separated, false) => greedy_separated(&orbits, kind, eps)?,
                (SetKind::Spanning, true) => exact_spanning(&orbits, kind, eps)?,
                (SetKind::Separated, true) => exact_separated(&orbits, kind, eps)?,
            };
            a.row(&[kind.to_string(), n.to_string(), num(eps), result.count.to_string(), exact.to_string()]);
        }
    }
    Ok(Outcome::artifact(a))
}

pub const ENTROPY_HEADER: &str = "metric,n,epsilon_or_delta,count_or_mass,log_value,slope";

fn curve_artifact(command: &str, config: &RunConfig, curve: &EntropyCurve) -> Artifact {
    let mut a = Artifact::new(command, config);
    a.line(ENTROPY_HEADER);
    for row in &curve.rows {
        let slope = curve.slope(row.scale).unwrap_or(0.0);
        a.row(&[
            curve.metric.to_string(),
            row.n.to_string(),
            num(row.scale),
            num(row.value),
            num(row.log_value),
            num(slope),
        ]);
    }
    a
}

fn entropy_top(r: &mut Resolved) -> Result<Outcome, CliError> {
    let kind = r.kind();
    let options = TopologicalOptions {
        sample_size: Resolved::get_or(&mut r.config.sample_size, 1000),
        set: Resolved::get_or(&mut r.config.set, SetKind::Separated),
        window: Resolved::get_or(&mut r.config.fit, FitWindow::default()),
    };
    let natural = r.system().natural_measure();
    let sampler = Resolved::get_or(&mut r.config.sampler, natural);
    let curve = topological_entropy_curve(r.system(), &sampler, r.n(), r.eps(), kind, &options, r.seed())?;
    Ok(Outcome::artifact(curve_artifact("entropy-top", &r.config, &curve)))
}

fn measure_sample(r: &mut Resolved, default_size: usize) -> Result<EmpiricalMeasure, CliError> {
    let size = Resolved::get_or(&mut r.config.measure_size, default_size);
    Ok(r.system().sample_points(&r.measure(), size, r.seed())?)
}

fn entropy_katok(r: &mut Resolved) -> Result<Outcome, CliError> {
    let kind = r.kind();
    let window = Resolved::get_or(&mut r.config.fit, FitWindow::default());
    let mu = measure_sample(r, 1000)?;
    let curve = katok_entropy_curve(r.system(), &mu, r.n(), r.eps(), kind, window)?;
    Ok(Outcome::artifact(curve_artifact("entropy-katok", &r.config, &curve)))
}

/// Median of the values; `None` when empty.
fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    Some(fk_core::criterion::quantile(&v, 0.5))
}

/// One row per `(n, δ)`, aggregated over base points: the median ball mass,
/// and the median of `-log(mass)/n` over bases whose ball caught a sample
/// point (empty when none did). The slope column carries, per `δ`, that
/// median at the largest `n` — the local entropy estimate.
fn entropy_brinkatok(r: &mut Resolved) -> Result<Outcome, CliError> {
    let mu = measure_sample(r, 1000)?;
    let bases: Vec<Point> = match r.config.x.clone() {
        Some(x) => vec![r.point(&x)?],
        None => {
            let count = Resolved::get_or(&mut r.config.base_count, 20);
            if count > mu.len() {
                return Err(CliError::Config(format!("base count {count} exceeds the measure size {}", mu.len())));
            }
            mu.points[..count].to_vec()
        }
    };
    r.config.kind = Some(fk_core::MetricKind::FK);
    let estimates = brin_katok_local_many(r.system(), &mu, &bases, r.n(), r.delta())?;
    let n_max = r.n().iter().copied().max().unwrap_or(0);
    let cell = |n: usize, delta: f64| {
        let rows: Vec<_> =
            estimates.iter().flat_map(|e| e.rows.iter().find(|row| row.n == n && row.delta == delta)).collect();
        let mass = median(rows.iter().map(|row| row.mass).collect()).unwrap_or(0.0);
        (mass, median(rows.iter().filter_map(|row| row.estimate).collect()))
    };
    let mut a = Artifact::new("entropy-brinkatok", &r.config);
    a.line(ENTROPY_HEADER);
    for &n in r.n() {
        for &delta in r.delta() {
            let (mass, estimate) = cell(n, delta);
            let finest = cell(n_max, delta).1;
            a.row(&[
                "fk".to_string(),
                n.to_string(),
                num(delta),
                num(mass),
                estimate.map(num).unwrap_or_default(),
                finest.map(num).unwrap_or_default(),
            ]);
        }
    }
    Ok(Outcome::artifact(a))
}

fn complexity(r: &mut Resolved) -> Result<Outcome, CliError> {
    let kind = r.kind();
    let scale = Resolved::get_or(&mut r.config.scale, GrowthScale::Linear { slope: 1.0 });
    let threshold = Resolved::get_or(&mut r.config.threshold, 0.1);
    let mu = measure_sample(r, 1000)?;
    let mut rows = Vec::new();
    for &n in r.n() {
        let orbits = r.system().orbits(&mu, n)?;
        for &eps in r.eps() {
            let count = measure_spanning_orbits(&orbits, kind, eps)?.count as f64;
            rows.push(CurveRow { n, scale: eps, value: count, log_value: count.ln() });
        }
    }
    let curve = complexity_compare(&rows, scale, threshold)?;
    let verdict = serde_json::to_value(curve.verdict)?.as_str().unwrap_or_default().to_string();
    let mut a = Artifact::new("complexity", &r.config);
    a.line("metric,n,epsilon,count,scale_value,ratio,verdict");
    for &(n, eps, count) in &curve.rows {
        let u = scale.at(n);
        a.row(&[kind.to_string(), n.to_string(), num(eps), num(count), num(u), num(count / u), verdict.clone()]);
    }
    Ok(Outcome { artifact: a, summary: None, failed: None })
}

fn default_partition(system: &System) -> Partition {
    Partition::zero_coordinate(system).unwrap_or_else(|_| Partition::bins(2).expect("two bins"))
}

fn criterion(r: &mut Resolved) -> Result<Outcome, CliError> {
    let partition = match r.config.partition {
        Some(Partition { kind: PartitionKind::ZeroCoordinate, .. }) => Partition::zero_coordinate(r.system())?,
        Some(p) => p,
        None => default_partition(r.system()),
    };
    r.config.partition = Some(partition);
    let candidates = Resolved::get_or(&mut r.config.candidate_count, 100);
    let mu = measure_sample(r, 2000)?;
    let mut reports: Vec<CriterionReport> = Vec::new();
    for &n in r.n() {
        for &eps in r.eps() {
            reports.push(katok_criterion_check(r.system(), &partition, &mu, n, eps, candidates, rng::mix64(r.seed()))?);
        }
    }
    let mut a = Artifact::new("criterion", &r.config);
    a.line(serde_json::to_string_pretty(&reports)?);
    Ok(Outcome::artifact(a))
}

pub const PROBE_HEADER: &str = "n,pairs,q05,q25,median,q75,q95,verdict";

fn probe(r: &mut Resolved) -> Result<Outcome, CliError> {
    let pairs = Resolved::get_or(&mut r.config.pair_count, 200);
    let default_threshold = 0.05 * r.system().diameter();
    let threshold = Resolved::get_or(&mut r.config.threshold, default_threshold);
    let mu = measure_sample(r, 1000)?;
    let mut a = Artifact::new("probe-ergodic", &r.config);
    a.line(PROBE_HEADER);
    for &n in r.n() {
        let p = ergodicity_probe(r.system(), &mu, n, pairs, rng::mix64(r.seed()), Some(threshold))?;
        a.row(&[
            p.n.to_string(),
            p.pair_count.to_string(),
            num(p.q05),
            num(p.q25),
            num(p.median),
            num(p.q75),
            num(p.q95),
            p.verdict.name().to_string(),
        ]);
    }
    Ok(Outcome::artifact(a))
}

fn verify(r: &mut Resolved) -> Result<Outcome, CliError> {
    let suite = required(&r.config.suite, "suite", "verify")?.to_string();
    let trials = Resolved::get_or(&mut r.config.trials, 200);
    let tol = r.tol();
    let names: Vec<&str> = if suite == "all" { SUITES.to_vec() } else { vec![suite.as_str()] };
    let reports: Vec<SuiteReport> =
        names.iter().map(|s| run_suite(s, trials, r.seed(), tol)).collect::<Result<_, _>>()?;
    let mut a = Artifact::new("verify", &r.config);
    a.line("suite,system,n,checks,violations");
    let mut summary = Vec::new();
    for rep in &reports {
        for row in &rep.rows {
            a.row(&[
                rep.suite.clone(),
                row.system.clone(),
                row.n.to_string(),
                row.checks.to_string(),
                row.violations.to_string(),
            ]);
        }
        summary.push(format!("suite={} checks={} violations={}", rep.suite, rep.checks(), rep.violations()));
        summary.extend(rep.examples.iter().map(|e| format!("  violation: {e}")));
    }
    let total: usize = reports.iter().map(SuiteReport::violations).sum();
    let failed = (total > 0).then(|| format!("{total} property violations"));
    Ok(Outcome { artifact: a, summary: Some(summary.join("\n")), failed })
}
