//! Entropy estimators built on orbit metrics.
//!
//! Counts here are relative to a finite sample standing in for the phase
//! space or the measure: separated counts are lower bounds for the true
//! `sr(n, ε)`, spanning counts approximate `sp(n, ε)`. Growth rates are fitted
//! by least squares of `log count` against `n`.
//!
//! Two ball conventions coexist. Spanning and separated sets use the closed
//! condition `d(x, y) ≤ ε` (and separation `> ε`); measure covers and local
//! masses use open balls `{y : d(x, y) < δ}`.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, domain};
use crate::matching::{unmatched_allowance, within, Ball, MetricKind};
use crate::systems::{EmpiricalMeasure, MeasureSpec, OrbitSegment, Point, System};
use crate::{Error, Result};

/// Largest sample the exhaustive spanning/separated search accepts.
pub const EXACT_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetKind {
    Spanning,
    Separated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exactness {
    Greedy,
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanningResult {
    pub kind: SetKind,
    pub metric: MetricKind,
    pub n: usize,
    pub eps: f64,
    /// Indices into the sample.
    pub centers: Vec<usize>,
    pub count: usize,
    pub exactness: Exactness,
}

/// Symmetric ball-membership relation on a sample, stored as bit rows.
#[derive(Debug, Clone)]
pub struct Neighborhoods {
    words: usize,
    rows: Vec<Vec<u64>>,
}

impl Neighborhoods {
    /// `i ~ j` iff `d(i, j) ≤ eps` (closed) or `< eps` (open). Pairs are
    /// evaluated in parallel; every point is its own neighbour.
    pub fn build(sample: &[OrbitSegment], kind: MetricKind, eps: f64, ball: Ball) -> Result<Neighborhoods> {
        let m = sample.len();
        let words = m.div_ceil(64);
        let upper: Vec<Vec<usize>> = (0..m)
            .into_par_iter()
            .map(|i| {
                let mut hits = Vec::new();
                for j in i + 1..m {
                    if within(kind, &sample[i], &sample[j], eps, ball)? {
                        hits.push(j);
                    }
                }
                Ok(hits)
            })
            .collect::<Result<_>>()?;
        let mut rows = vec![vec![0u64; words]; m];
        for (i, hits) in upper.into_iter().enumerate() {
            set_bit(&mut rows[i], i);
            for j in hits {
                set_bit(&mut rows[i], j);
                set_bit(&mut rows[j], i);
            }
        }
        Ok(Neighborhoods { words, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.rows[i][j / 64] >> (j % 64) & 1 == 1
    }

    pub fn degree(&self, i: usize) -> usize {
        self.rows[i].iter().map(|w| w.count_ones() as usize).sum()
    }

    fn gain(&self, i: usize, uncovered: &[u64]) -> usize {
        self.rows[i].iter().zip(uncovered).map(|(a, b)| (a & b).count_ones() as usize).sum()
    }

    /// Greedy cover: repeatedly take the row covering the most uncovered
    /// points (ties to the lowest index) until `done(covered)` holds.
    ///
    /// Gains only shrink, so stale heap entries are upper bounds and a
    /// popped entry whose refreshed gain still beats the next entry is the
    /// true maximum. The selection is identical to the eager scan.
    fn greedy_cover(&self, done: impl Fn(usize) -> bool) -> Vec<usize> {
        let m = self.len();
        let mut uncovered = vec![0u64; self.words];
        for i in 0..m {
            set_bit(&mut uncovered, i);
        }
        let mut heap: BinaryHeap<(usize, Reverse<usize>)> = (0..m).map(|i| (self.degree(i), Reverse(i))).collect();
        let mut covered = 0usize;
        let mut centers = Vec::new();
        while !done(covered) {
            let Some((_, Reverse(i))) = heap.pop() else { break };
            let gain = self.gain(i, &uncovered);
            if let Some(&top) = heap.peek() {
                if (gain, Reverse(i)).cmp(&top) == Ordering::Less {
                    heap.push((gain, Reverse(i)));
                    continue;
                }
            }
            if gain == 0 {
                break;
            }
            centers.push(i);
            covered += gain;
            for (u, r) in uncovered.iter_mut().zip(&self.rows[i]) {
                *u &= !r;
            }
        }
        centers
    }
}

fn set_bit(row: &mut [u64], j: usize) {
    row[j / 64] |= 1 << (j % 64);
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("radius must be positive, got {eps}")))
    }
}

fn sample_n(sample: &[OrbitSegment]) -> Result<usize> {
    let first = sample.first().ok_or_else(|| domain("sample is empty"))?;
    if sample.iter().any(|o| o.len() != first.len()) {
        return Err(domain("sample orbits have different lengths"));
    }
    Ok(first.len())
}

impl SpanningResult {
    /// Re-checks the defining property against the sample: every point
    /// within `eps` of a center (spanning), or all centers pairwise more
    /// than `eps` apart (separated).
    pub fn verify(&self, sample: &[OrbitSegment]) -> Result<bool> {
        match self.kind {
            SetKind::Spanning => {
                for x in sample {
                    let mut hit = false;
                    for &c in &self.centers {
                        if within(self.metric, x, &sample[c], self.eps, Ball::Closed)? {
                            hit = true;
                            break;
                        }
                    }
                    if !hit {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            SetKind::Separated => {
                for (a, &i) in self.centers.iter().enumerate() {
                    for &j in &self.centers[a + 1..] {
                        if within(self.metric, &sample[i], &sample[j], self.eps, Ball::Closed)? {
                            return Ok(false);
                        }
                    }
                }
                Ok(true)
            }
        }
    }

    fn new(kind: SetKind, metric: MetricKind, n: usize, eps: f64, centers: Vec<usize>, exactness: Exactness) -> Self {
        SpanningResult { kind, metric, n, eps, count: centers.len(), centers, exactness }
    }
}

/// Greedy `(n, ε)`-spanning set of the sample (greedy set cover over closed balls).
pub fn greedy_spanning(sample: &[OrbitSegment], kind: MetricKind, eps: f64) -> Result<SpanningResult> {
    check_eps(eps)?;
    let n = sample_n(sample)?;
    let hoods = Neighborhoods::build(sample, kind, eps, Ball::Closed)?;
    let m = sample.len();
    let centers = hoods.greedy_cover(|covered| covered == m);
    let result = SpanningResult::new(SetKind::Spanning, kind, n, eps, centers, Exactness::Greedy);
    assert!(
        (0..m).all(|i| result.centers.iter().any(|&c| hoods.contains(c, i))),
        "greedy spanning set fails to cover the sample"
    );
    Ok(result)
}

/// Greedy `(n, ε)`-separated set: scan in index order and keep a point iff
/// it is more than `ε` from every kept point. The result is maximal, hence
/// also spanning for the sample.
pub fn greedy_separated(sample: &[OrbitSegment], kind: MetricKind, eps: f64) -> Result<SpanningResult> {
    check_eps(eps)?;
    let n = sample_n(sample)?;
    let mut kept: Vec<usize> = Vec::new();
    for (i, x) in sample.iter().enumerate() {
        let mut close = false;
        for &k in &kept {
            if within(kind, x, &sample[k], eps, Ball::Closed)? {
                close = true;
                break;
            }
        }
        if !close {
            kept.push(i);
        }
    }
    let result = SpanningResult::new(SetKind::Separated, kind, n, eps, kept, Exactness::Greedy);
    assert!(result.verify(sample)?, "greedy separated set is not separated");
    Ok(result)
}

fn exact_guard(sample: &[OrbitSegment]) -> Result<usize> {
    let n = sample_n(sample)?;
    if sample.len() > EXACT_LIMIT {
        return Err(domain(format!(
            "exhaustive search is limited to {EXACT_LIMIT} points, sample has {}",
            sample.len()
        )));
    }
    Ok(n)
}

fn masks(sample: &[OrbitSegment], kind: MetricKind, eps: f64) -> Result<Vec<u32>> {
    let hoods = Neighborhoods::build(sample, kind, eps, Ball::Closed)?;
    Ok((0..sample.len()).map(|i| hoods.rows[i][0] as u32).collect())
}

fn centers_of(mask: u32) -> Vec<usize> {
    (0..32).filter(|b| mask >> b & 1 == 1).collect()
}

/// Smallest spanning subset of the sample, by exhaustive search.
pub fn exact_spanning(sample: &[OrbitSegment], kind: MetricKind, eps: f64) -> Result<SpanningResult> {
    check_eps(eps)?;
    let n = exact_guard(sample)?;
    let rows = masks(sample, kind, eps)?;
    let m = sample.len();
    let full = (1u32 << m) - 1;
    let best = (1..=full)
        .filter(|&s| rows.iter().enumerate().filter(|(i, _)| s >> i & 1 == 1).fold(0, |acc, (_, r)| acc | r) == full)
        .min_by_key(|s| (s.count_ones(), *s))
        .expect("the whole sample spans itself");
    let result = SpanningResult::new(SetKind::Spanning, kind, n, eps, centers_of(best), Exactness::Exact);
    assert!(result.verify(sample)?);
    Ok(result)
}

/// Largest separated subset of the sample, by exhaustive search.
pub fn exact_separated(sample: &[OrbitSegment], kind: MetricKind, eps: f64) -> Result<SpanningResult> {
    check_eps(eps)?;
    let n = exact_guard(sample)?;
    let rows = masks(sample, kind, eps)?;
    let m = sample.len();
    let best = (1..(1u32 << m))
        .filter(|&s| (0..m).filter(|i| s >> i & 1 == 1).all(|i| rows[i] & s == 1 << i))
        .max_by_key(|s| (s.count_ones(), Reverse(*s)))
        .expect("singletons are separated");
    let result = SpanningResult::new(SetKind::Separated, kind, n, eps, centers_of(best), Exactness::Exact);
    assert!(result.verify(sample)?);
    Ok(result)
}

/// Greedy cover of the empirical measure by open `ε`-balls until the
/// covered mass exceeds `1 - ε`; the count approximates `sp(μ, n, ε)`.
pub fn measure_spanning_orbits(orbits: &[OrbitSegment], kind: MetricKind, eps: f64) -> Result<SpanningResult> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(domain(format!("measure cover radius must lie in (0,1), got {eps}")));
    }
    let n = sample_n(orbits)?;
    let m = orbits.len();
    let hoods = Neighborhoods::build(orbits, kind, eps, Ball::Open)?;
    let enough = |covered: usize| covered as f64 / m as f64 > 1.0 - eps;
    let centers = hoods.greedy_cover(enough);
    let covered = (0..m).filter(|&i| centers.iter().any(|&c| hoods.contains(c, i))).count();
    assert!(enough(covered), "all points cover themselves, so the greedy cover must reach 1 - eps");
    Ok(SpanningResult::new(SetKind::Spanning, kind, n, eps, centers, Exactness::Greedy))
}

pub fn measure_spanning(
    system: &System,
    measure: &EmpiricalMeasure,
    n: usize,
    eps: f64,
    kind: MetricKind,
) -> Result<SpanningResult> {
    if measure.is_empty() {
        return Err(domain("empirical measure is empty"));
    }
    measure_spanning_orbits(&system.orbits(measure, n)?, kind, eps)
}

/// Which `n` values enter the growth-rate fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitWindow {
    /// Rows the sample actually resolves: the count stays at or below
    /// `saturation × sample size`, and for FK-type metrics the number of
    /// unmatched indices a ball tolerates equals its value at the smallest
    /// `n`. A finite sample cannot hold more than its size in separated
    /// points, and every jump of `⌊εn⌋` inflates the balls at once, so rows
    /// outside this window measure the sample rather than the system.
    /// Falls back to the two smallest `n` when fewer than two rows qualify.
    Resolved {
        saturation: f64,
    },
    /// The upper half of the distinct `n` values (the larger half when odd).
    TopHalf,
    All,
    /// `n` within `[lo, hi]`.
    Range(usize, usize),
}

impl Default for FitWindow {
    fn default() -> Self {
        FitWindow::Resolved { saturation: 0.25 }
    }
}

/// What a fit window needs to know about how the counts were produced.
#[derive(Debug, Clone, Copy)]
struct FitContext {
    metric: MetricKind,
    ball: Ball,
    sample_size: usize,
}

impl FitWindow {
    /// `(n, count)` rows for one radius, sorted by `n`; returns the chosen `n`.
    fn select_rows(self, rows: &[(usize, f64)], eps: f64, ctx: FitContext) -> Vec<usize> {
        let ns: Vec<usize> = rows.iter().map(|r| r.0).collect();
        match self {
            FitWindow::Resolved { saturation } => {
                let cap = saturation * ctx.sample_size as f64;
                let fk_like = matches!(ctx.metric, MetricKind::FK | MetricKind::FKUnordered);
                let first = ns.first().map(|&n| unmatched_allowance(n, eps, ctx.ball));
                let chosen: Vec<usize> = rows
                    .iter()
                    .filter(|(n, count)| {
                        *count <= cap && (!fk_like || Some(unmatched_allowance(*n, eps, ctx.ball)) == first)
                    })
                    .map(|r| r.0)
                    .collect();
                if chosen.len() >= 2 {
                    chosen
                } else {
                    ns.into_iter().take(2).collect()
                }
            }
            other => other.select(&ns),
        }
    }

    fn select(self, ns: &[usize]) -> Vec<usize> {
        let mut ns = ns.to_vec();
        ns.sort_unstable();
        ns.dedup();
        match self {
            FitWindow::All | FitWindow::Resolved { .. } => ns,
            FitWindow::TopHalf => {
                let keep = ns.len().div_ceil(2).max(2.min(ns.len()));
                ns[ns.len() - keep..].to_vec()
            }
            FitWindow::Range(lo, hi) => ns.into_iter().filter(|n| (lo..=hi).contains(n)).collect(),
        }
    }
}

/// Ordinary least-squares slope of `ys` against `xs`; 0 with fewer than two distinct `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let m = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return 0.0;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub n: usize,
    /// `ε` for counts, `δ` for ball masses.
    pub scale: f64,
    /// A count, or a ball mass.
    pub value: f64,
    /// `log count`, or `-log(mass) / n`.
    pub log_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyCurve {
    pub metric: MetricKind,
    pub rows: Vec<CurveRow>,
    /// `(ε, slope of log count vs n)` in the order the radii were given.
    pub slopes: Vec<(f64, f64)>,
    pub window: FitWindow,
}

impl EntropyCurve {
    fn from_counts(rows: Vec<CurveRow>, eps_list: &[f64], window: FitWindow, ctx: FitContext) -> EntropyCurve {
        let slopes = eps_list
            .iter()
            .map(|&eps| {
                let mut group: Vec<&CurveRow> = rows.iter().filter(|r| r.scale == eps).collect();
                group.sort_by_key(|r| r.n);
                let pairs: Vec<(usize, f64)> = group.iter().map(|r| (r.n, r.value)).collect();
                let chosen = window.select_rows(&pairs, eps, ctx);
                let (xs, ys): (Vec<f64>, Vec<f64>) =
                    group.iter().filter(|r| chosen.contains(&r.n)).map(|r| (r.n as f64, r.log_value)).unzip();
                (eps, ols_slope(&xs, &ys))
            })
            .collect();
        EntropyCurve { metric: ctx.metric, rows, slopes, window }
    }

    pub fn slope(&self, eps: f64) -> Option<f64> {
        self.slopes.iter().find(|(e, _)| *e == eps).map(|(_, s)| *s)
    }

    /// Counts for one radius, ordered by `n`.
    pub fn counts(&self, eps: f64) -> Vec<(usize, f64)> {
        self.rows.iter().filter(|r| r.scale == eps).map(|r| (r.n, r.value)).collect()
    }
}

fn check_ranges(n_range: &[usize], radii: &[f64]) -> Result<()> {
    if n_range.is_empty() || n_range.contains(&0) {
        return Err(config("n range must be nonempty with positive entries"));
    }
    if radii.is_empty() {
        return Err(config("at least one radius is required"));
    }
    radii.iter().try_for_each(|&e| check_eps(e))
}

/// Options for [`topological_entropy_curve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologicalOptions {
    pub sample_size: usize,
    pub set: SetKind,
    pub window: FitWindow,
}

impl Default for TopologicalOptions {
    fn default() -> Self {
        TopologicalOptions { sample_size: 1000, set: SetKind::Separated, window: FitWindow::default() }
    }
}

/// Growth of separated (or spanning) counts of an `N`-point sample.
pub fn topological_entropy_curve(
    system: &System,
    sampler: &MeasureSpec,
    n_range: &[usize],
    eps_list: &[f64],
    kind: MetricKind,
    options: &TopologicalOptions,
    seed: u64,
) -> Result<EntropyCurve> {
    check_ranges(n_range, eps_list)?;
    if options.sample_size < 2 {
        return Err(config("sample size must be at least 2"));
    }
    let points = system.sample_points(sampler, options.sample_size, seed)?;
    let mut rows = Vec::new();
    for &n in n_range {
        let orbits = system.orbits(&points, n)?;
        for &eps in eps_list {
            let result = match options.set {
                SetKind::Separated => greedy_separated(&orbits, kind, eps)?,
                SetKind::Spanning => greedy_spanning(&orbits, kind, eps)?,
            };
            rows.push(CurveRow { n, scale: eps, value: result.count as f64, log_value: (result.count as f64).ln() });
        }
    }
    let ctx = FitContext { metric: kind, ball: Ball::Closed, sample_size: options.sample_size };
    Ok(EntropyCurve::from_counts(rows, eps_list, options.window, ctx))
}

/// Growth of `sp(μ, n, ε)` for the empirical measure.
pub fn katok_entropy_curve(
    system: &System,
    measure: &EmpiricalMeasure,
    n_range: &[usize],
    eps_list: &[f64],
    kind: MetricKind,
    window: FitWindow,
) -> Result<EntropyCurve> {
    check_ranges(n_range, eps_list)?;
    let mut rows = Vec::new();
    for &n in n_range {
        let orbits = system.orbits(measure, n)?;
        for &eps in eps_list {
            let result = measure_spanning_orbits(&orbits, kind, eps)?;
            rows.push(CurveRow { n, scale: eps, value: result.count as f64, log_value: (result.count as f64).ln() });
        }
    }
    let ctx = FitContext { metric: kind, ball: Ball::Open, sample_size: measure.len() };
    Ok(EntropyCurve::from_counts(rows, eps_list, window, ctx))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalRow {
    pub n: usize,
    pub delta: f64,
    /// Fraction of the empirical measure in the open FK ball.
    pub mass: f64,
    /// `-log(mass) / n`; `None` when the ball caught no sample point.
    pub estimate: Option<f64>,
}

impl LocalRow {
    pub fn zero_mass(&self) -> bool {
        self.estimate.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalEntropyEstimate {
    pub base: Point,
    pub rows: Vec<LocalRow>,
    pub sample_size: usize,
}

impl LocalEntropyEstimate {
    /// Estimate at the largest `n` and smallest `δ`, if that cell has mass.
    pub fn finest(&self) -> Option<f64> {
        let n = self.rows.iter().map(|r| r.n).max()?;
        let delta = self.rows.iter().map(|r| r.delta).fold(f64::INFINITY, f64::min);
        self.rows.iter().find(|r| r.n == n && r.delta == delta)?.estimate
    }

    pub fn all_zero_mass(&self) -> bool {
        self.rows.iter().all(LocalRow::zero_mass)
    }
}

/// Local entropy at several base points: for each `(n, δ)` the empirical
/// mass of the open ball `{y : d_FKn(x, y) < δ}` and `-log(mass) / n`.
pub fn brin_katok_local_many(
    system: &System,
    measure: &EmpiricalMeasure,
    bases: &[Point],
    n_range: &[usize],
    delta_list: &[f64],
) -> Result<Vec<LocalEntropyEstimate>> {
    check_ranges(n_range, delta_list)?;
    if measure.is_empty() {
        return Err(domain("empirical measure is empty"));
    }
    let m = measure.len();
    let mut out: Vec<LocalEntropyEstimate> =
        bases.iter().map(|b| LocalEntropyEstimate { base: b.clone(), rows: Vec::new(), sample_size: m }).collect();
    for &n in n_range {
        let orbits = system.orbits(measure, n)?;
        for (est, base) in out.iter_mut().zip(bases) {
            let ox = system.orbit(base, n)?;
            for &delta in delta_list {
                let hits = orbits
                    .par_iter()
                    .map(|oy| within(MetricKind::FK, &ox, oy, delta, Ball::Open).map(|b| b as usize))
                    .try_reduce(|| 0, |a, b| Ok(a + b))?;
                let mass = hits as f64 / m as f64;
                let estimate = (hits > 0).then(|| -mass.ln() / n as f64);
                est.rows.push(LocalRow { n, delta, mass, estimate });
            }
        }
    }
    Ok(out)
}

pub fn brin_katok_local(
    system: &System,
    measure: &EmpiricalMeasure,
    x: &Point,
    n_range: &[usize],
    delta_list: &[f64],
) -> Result<LocalEntropyEstimate> {
    let mut v = brin_katok_local_many(system, measure, std::slice::from_ref(x), n_range, delta_list)?;
    Ok(v.remove(0))
}

/// Reference growth scale `U(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum GrowthScale {
    /// `coef · n^exponent`
    Power { exponent: f64, coef: f64 },
    /// `slope · n`
    Linear { slope: f64 },
    /// `coef · base^n`
    Exponential { base: f64, coef: f64 },
}

impl GrowthScale {
    pub fn at(&self, n: usize) -> f64 {
        let n = n as f64;
        match *self {
            GrowthScale::Power { exponent, coef } => coef * n.powf(exponent),
            GrowthScale::Linear { slope } => slope * n,
            GrowthScale::Exponential { base, coef } => coef * base.powf(n),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            GrowthScale::Power { exponent, coef } => exponent.is_finite() && coef > 0.0,
            GrowthScale::Linear { slope } => slope > 0.0,
            GrowthScale::Exponential { base, coef } => base > 0.0 && coef > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(config(format!("invalid growth scale {self:?}")))
        }
    }
}

impl std::str::FromStr for GrowthScale {
    type Err = Error;

    /// `power:a[:coef]`, `linear:a`, `exp:b[:coef]`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |i: usize, default: Option<f64>| -> Result<f64> {
            match parts.get(i) {
                Some(t) => t.trim().parse::<f64>().map_err(|_| config(format!("bad number '{t}' in scale '{s}'"))),
                None => default.ok_or_else(|| config(format!("scale '{s}' is missing a parameter"))),
            }
        };
        let scale = match parts[0] {
            "power" => GrowthScale::Power { exponent: num(1, None)?, coef: num(2, Some(1.0))? },
            "linear" => GrowthScale::Linear { slope: num(1, Some(1.0))? },
            "exp" | "exponential" => GrowthScale::Exponential { base: num(1, None)?, coef: num(2, Some(1.0))? },
            other => return Err(config(format!("unknown growth scale '{other}'"))),
        };
        scale.validate()?;
        Ok(scale)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComplexityVerdict {
    Weaker,
    NotDetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityCurve {
    /// `(n, ε, sp(μ, n, ε))`
    pub rows: Vec<(usize, f64, f64)>,
    pub scale: GrowthScale,
    pub threshold: f64,
    /// `(ε, min_n sp / U(n))`
    pub min_ratios: Vec<(f64, f64)>,
    pub verdict: ComplexityVerdict,
}

/// Compares measured `sp(μ, n, ε)` rows against `U(n)`. The verdict is
/// `Weaker` iff for every radius some computed `n` has `sp / U(n)` below
/// `threshold`; a finite run cannot certify the `liminf`, so the
/// alternative is `NotDetermined`.
pub fn complexity_compare(rows: &[CurveRow], scale: GrowthScale, threshold: f64) -> Result<ComplexityCurve> {
    scale.validate()?;
    if rows.is_empty() {
        return Err(domain("no spanning rows to compare"));
    }
    let mut radii: Vec<f64> = Vec::new();
    for r in rows {
        if !radii.contains(&r.scale) {
            radii.push(r.scale);
        }
    }
    let min_ratios: Vec<(f64, f64)> = radii
        .iter()
        .map(|&eps| {
            let m =
                rows.iter().filter(|r| r.scale == eps).map(|r| r.value / scale.at(r.n)).fold(f64::INFINITY, f64::min);
            (eps, m)
        })
        .collect();
    let verdict = if min_ratios.iter().all(|&(_, m)| m < threshold) {
        ComplexityVerdict::Weaker
    } else {
        ComplexityVerdict::NotDetermined
    };
    Ok(ComplexityCurve {
        rows: rows.iter().map(|r| (r.n, r.scale, r.value)).collect(),
        scale,
        threshold,
        min_ratios,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::SystemSpec;

    fn shift(h: usize) -> System {
        System::new(SystemSpec::FullShift { k: 2, horizon: Some(h) }).unwrap()
    }

    fn sample(system: &System, m: usize, n: usize, seed: u64) -> Vec<OrbitSegment> {
        let mu = system.sample_points(&MeasureSpec::Lebesgue, m, seed).unwrap();
        system.orbits(&mu, n).unwrap()
    }

    #[test]
    fn large_radius_gives_one_center() {
        let s = shift(40);
        let orbits = sample(&s, 30, 8, 1);
        for kind in MetricKind::ALL {
            assert_eq!(greedy_spanning(&orbits, kind, 1.0).unwrap().count, 1, "{kind}");
            assert_eq!(greedy_separated(&orbits, kind, 1.0).unwrap().count, 1, "{kind}");
        }
        assert_eq!(greedy_spanning(&orbits[..1], MetricKind::FK, 0.01).unwrap().count, 1);
        assert!(greedy_spanning(&[], MetricKind::FK, 0.1).is_err());
        assert!(greedy_separated(&orbits, MetricKind::FK, 0.0).is_err());
    }

    #[test]
    fn greedy_separated_is_maximal_and_spanning() {
        let r = System::new(SystemSpec::Rotation { alpha: 0.618_033_988_7 }).unwrap();
        let orbits = sample(&r, 200, 10, 4);
        for kind in [MetricKind::Bowen, MetricKind::FK, MetricKind::WeakMean] {
            let sep = greedy_separated(&orbits, kind, 0.05).unwrap();
            assert!(sep.verify(&orbits).unwrap());
            let as_span = SpanningResult { kind: SetKind::Spanning, ..sep.clone() };
            assert!(as_span.verify(&orbits).unwrap());
            let span = greedy_spanning(&orbits, kind, 0.05).unwrap();
            assert!(span.verify(&orbits).unwrap());
        }
    }

    #[test]
    fn greedy_is_deterministic() {
        let s = shift(40);
        let orbits = sample(&s, 120, 6, 8);
        let a = greedy_spanning(&orbits, MetricKind::FK, 0.2).unwrap();
        let b = greedy_spanning(&orbits, MetricKind::FK, 0.2).unwrap();
        assert_eq!(a, b);
        let c = measure_spanning_orbits(&orbits, MetricKind::FK, 0.2).unwrap();
        assert_eq!(c, measure_spanning_orbits(&orbits, MetricKind::FK, 0.2).unwrap());
    }

    /// Eager greedy: scan all candidates every round.
    fn eager_cover(h: &Neighborhoods, done: impl Fn(usize) -> bool) -> Vec<usize> {
        let m = h.len();
        let mut covered = vec![false; m];
        let mut count = 0;
        let mut centers = Vec::new();
        while !done(count) {
            let (best, gain) = (0..m)
                .map(|i| (i, (0..m).filter(|&j| !covered[j] && h.contains(i, j)).count()))
                .fold((usize::MAX, 0), |acc, (i, g)| if g > acc.1 { (i, g) } else { acc });
            if gain == 0 {
                break;
            }
            centers.push(best);
            for (j, c) in covered.iter_mut().enumerate() {
                if h.contains(best, j) && !*c {
                    *c = true;
                    count += 1;
                }
            }
        }
        centers
    }

    #[test]
    fn lazy_greedy_matches_eager_greedy() {
        let s = shift(40);
        for seed in 0..5 {
            let orbits = sample(&s, 90, 7, seed);
            for eps in [0.1, 0.2, 0.3] {
                let h = Neighborhoods::build(&orbits, MetricKind::FK, eps, Ball::Open).unwrap();
                assert_eq!(h.greedy_cover(|c| c == 90), eager_cover(&h, |c| c == 90));
                assert_eq!(h.greedy_cover(|c| c >= 60), eager_cover(&h, |c| c >= 60));
            }
        }
    }

    #[test]
    fn exact_is_at_most_greedy_spanning_and_at_least_greedy_separated() {
        let s = shift(40);
        for seed in 0..10 {
            let orbits = sample(&s, 12, 6, seed);
            for eps in [0.1, 0.2, 0.35] {
                let es = exact_spanning(&orbits, MetricKind::FK, eps).unwrap();
                let gs = greedy_spanning(&orbits, MetricKind::FK, eps).unwrap();
                assert!(es.count <= gs.count);
                let er = exact_separated(&orbits, MetricKind::FK, eps).unwrap();
                let gr = greedy_separated(&orbits, MetricKind::FK, eps).unwrap();
                assert!(er.count >= gr.count);
                assert_eq!(er.exactness, Exactness::Exact);
            }
        }
        assert!(exact_spanning(&sample(&s, 13, 4, 0), MetricKind::FK, 0.1).is_err());
    }

    #[test]
    fn measure_cover_with_radius_near_one() {
        let s = shift(40);
        let orbits = sample(&s, 50, 10, 3);
        // one ball holds at least 1/M > 1 - eps
        let r = measure_spanning_orbits(&orbits, MetricKind::FK, 1.0 - 1.0 / 60.0).unwrap();
        assert_eq!(r.count, 1);
        assert!(measure_spanning_orbits(&orbits, MetricKind::FK, 1.0).is_err());
        assert!(measure_spanning_orbits(&orbits, MetricKind::FK, 0.0).is_err());
    }

    #[test]
    fn fit_windows_and_slopes() {
        assert_eq!(FitWindow::TopHalf.select(&[4, 5, 6, 7, 8, 9, 10, 11, 12]), vec![8, 9, 10, 11, 12]);
        assert_eq!(FitWindow::TopHalf.select(&[4, 8]), vec![4, 8]);
        assert_eq!(FitWindow::TopHalf.select(&[4]), vec![4]);
        assert_eq!(FitWindow::Range(5, 6).select(&[4, 5, 6, 7]), vec![5, 6]);
        let ctx = FitContext { metric: MetricKind::FK, ball: Ball::Closed, sample_size: 2000 };
        let rows: Vec<(usize, f64)> = [128.0, 256.0, 498.0, 875.0, 1270.0, 1570.0, 900.0, 1207.0, 1477.0]
            .iter()
            .enumerate()
            .map(|(i, &c)| (i + 4, c))
            .collect();
        let w = FitWindow::default();
        // saturation cap 500; the closed allowance at eps 0.1 jumps at n = 10
        assert_eq!(w.select_rows(&rows, 0.1, ctx), vec![4, 5, 6]);
        let small = FitContext { sample_size: 8, ..ctx };
        assert_eq!(w.select_rows(&rows, 0.1, small), vec![4, 5]);
        let bowen = FitContext { metric: MetricKind::Bowen, ..ctx };
        let capped: Vec<(usize, f64)> = rows.iter().map(|&(n, c)| (n, c.min(400.0))).collect();
        assert_eq!(w.select_rows(&capped, 0.1, bowen).len(), 9);
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 0.7 * x + 2.0).collect();
        assert!((ols_slope(&xs, &ys) - 0.7).abs() < 1e-12);
        assert_eq!(ols_slope(&[3.0], &[1.0]), 0.0);
    }

    #[test]
    fn local_mass_is_one_for_large_delta() {
        let s = shift(40);
        let mu = s.sample_points(&MeasureSpec::Lebesgue, 100, 5).unwrap();
        let est = brin_katok_local(&s, &mu, &mu.points[0], &[4, 8], &[1.5]).unwrap();
        for row in &est.rows {
            assert_eq!(row.mass, 1.0);
            assert_eq!(row.estimate, Some(0.0));
        }
    }

    #[test]
    fn local_zero_mass_is_flagged() {
        let s = shift(40);
        let mu = s.sample_points(&MeasureSpec::Lebesgue, 100, 5).unwrap();
        let outsider = s.symbol_point(&[1; 40]).unwrap();
        let est = brin_katok_local(&s, &mu, &outsider, &[16], &[0.01]).unwrap();
        assert!(est.all_zero_mass());
        assert_eq!(est.finest(), None);
    }

    #[test]
    fn complexity_verdicts() {
        let bounded: Vec<CurveRow> =
            [4, 8, 16, 32, 64].iter().map(|&n| CurveRow { n, scale: 0.1, value: 3.0, log_value: 3f64.ln() }).collect();
        let linear = GrowthScale::Linear { slope: 1.0 };
        assert_eq!(complexity_compare(&bounded, linear, 0.1).unwrap().verdict, ComplexityVerdict::Weaker);
        let growing: Vec<CurveRow> = [4, 6, 8, 10, 12]
            .iter()
            .map(|&n| CurveRow { n, scale: 0.1, value: 2f64.powi(n as i32), log_value: n as f64 * 2f64.ln() })
            .collect();
        assert_eq!(complexity_compare(&growing, linear, 0.1).unwrap().verdict, ComplexityVerdict::NotDetermined);
        let top = 2f64.powi(12);
        let huge = GrowthScale::Exponential { base: 2.0, coef: top };
        assert_eq!(complexity_compare(&growing, huge, 0.1).unwrap().verdict, ComplexityVerdict::Weaker);
        assert!("power:2".parse::<GrowthScale>().is_ok());
        assert!("exp:2:5".parse::<GrowthScale>().is_ok());
        assert!("cubic".parse::<GrowthScale>().is_err());
    }
}
