//! Pairwise quantities on orbit segments.
//!
//! For orbit segments `x, ..., T^(n-1)x` and `y, ..., T^(n-1)y` write
//! `c(i, j) = d(T^i x, T^j y)`.
//!
//! - Bowen `d_n = max_i c(i, i)` and mean `d̄_n = (1/n) Σ_i c(i, i)`.
//! - An order-preserving `(n, δ)`-match pairs indices `i ↦ π(i)` with
//!   `c(i, π(i)) < δ` (strictly) and `π` increasing. `f̄_{n,δ}` is the
//!   fraction of indices left unmatched by a largest such match, and the
//!   Feldman-Katok distance is `d_FKn = inf{δ > 0 : f̄_{n,δ} < δ}`.
//! - Dropping the order constraint gives `f̃_{n,δ}` (a maximum bipartite
//!   matching) and `d̃_FKn`.
//! - The weak-mean distance `F_n` is the optimal assignment cost
//!   `(1/n) min_σ Σ_k c(k, σ(k))`.
//!
//! `f̄_{n,δ}` and `f̃_{n,δ}` are nonincreasing step functions of `δ` with
//! values in `{0, 1/n, ..., 1}`, so `δ ↦ f̄_{n,δ} - δ` is strictly
//! decreasing and the infimum can be found by bisection. It is also
//! attained at a computable point: `f̄` only changes just above a pairwise
//! distance, so scanning the sorted distances gives the exact value.

use std::cmp::Ordering;
use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::domain;
use crate::systems::{OrbitSegment, Word};
use crate::Result;

/// The orbit metrics that can drive spanning, separated and ball computations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Bowen,
    Mean,
    #[serde(rename = "fk")]
    FK,
    #[serde(rename = "fk_unordered")]
    FKUnordered,
    #[serde(rename = "weakmean")]
    WeakMean,
}

impl MetricKind {
    pub const ALL: [MetricKind; 5] =
        [MetricKind::Bowen, MetricKind::Mean, MetricKind::FK, MetricKind::FKUnordered, MetricKind::WeakMean];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Bowen => "bowen",
            MetricKind::Mean => "mean",
            MetricKind::FK => "fk",
            MetricKind::FKUnordered => "fk_unordered",
            MetricKind::WeakMean => "weakmean",
        }
    }
}

impl std::str::FromStr for MetricKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "bowen" => Ok(MetricKind::Bowen),
            "mean" => Ok(MetricKind::Mean),
            "fk" => Ok(MetricKind::FK),
            "fk_unordered" | "fkunordered" => Ok(MetricKind::FKUnordered),
            "weakmean" | "weak_mean" => Ok(MetricKind::WeakMean),
            other => Err(crate::Error::Config(format!("unknown metric kind '{other}'"))),
        }
    }
}

impl std::fmt::Display for MetricKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// How the infimum over `δ` in the FK distances is resolved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    /// Bisection to the given absolute tolerance.
    Bisection(f64),
    /// Scan of the candidate thresholds; exact up to floating-point distances.
    Exact,
}

impl Resolution {
    /// Default tolerance `1e-9 * max(1, diameter)`.
    pub fn default_for(diameter: f64) -> Resolution {
        Resolution::Bisection(1e-9 * diameter.max(1.0))
    }

    fn check(self) -> Result<Self> {
        match self {
            Resolution::Bisection(tol) if !(tol > 0.0 && tol.is_finite()) => {
                Err(domain(format!("tolerance must be positive, got {tol}")))
            }
            r => Ok(r),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    Ordered,
    Unordered,
}

/// A partial bijection between orbit indices pairing points closer than `threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Match {
    pub flavor: Flavor,
    pub domain: Vec<usize>,
    pub range: Vec<usize>,
    pub threshold: f64,
    pub n: usize,
}

impl Match {
    pub fn size(&self) -> usize {
        self.domain.len()
    }

    /// `1 - |π| / n`.
    pub fn deficiency(&self) -> f64 {
        deficiency(self.size(), self.n)
    }
}

/// Fraction of unmatched indices. Computed as `(n - size) / n` so that
/// comparisons against thresholds like `0.1` agree with `k / n` literals.
#[inline]
pub fn deficiency(size: usize, n: usize) -> f64 {
    (n - size) as f64 / n as f64
}

/// Largest number of unmatched indices an FK ball of radius `eps` tolerates
/// at length `n`; `None` if even a perfect match is not inside.
pub fn unmatched_allowance(n: usize, eps: f64, ball: Ball) -> Option<usize> {
    slack(n, eps, ball == Ball::Closed)
}

/// Largest number of unmatched indices `u` with `u / n ≤ eps` (closed) or `< eps` (open).
fn slack(n: usize, eps: f64, closed: bool) -> Option<usize> {
    let ok = |u: usize| {
        let f = deficiency(n - u, n);
        if closed {
            f <= eps
        } else {
            f < eps
        }
    };
    if !ok(0) {
        return None;
    }
    let guess = ((eps * n as f64).floor().max(0.0) as usize).min(n);
    let mut u = guess;
    while u > 0 && !ok(u) {
        u -= 1;
    }
    while u < n && ok(u + 1) {
        u += 1;
    }
    Some(u)
}

fn check_pair(ox: &OrbitSegment, oy: &OrbitSegment) -> Result<usize> {
    if ox.len() != oy.len() {
        return Err(domain(format!("orbit lengths differ: {} vs {}", ox.len(), oy.len())));
    }
    if !ox.same_space(oy) {
        return Err(domain("orbit segments come from different systems"));
    }
    Ok(ox.len())
}

/// The `n × n` matrix `c(i, j) = d(T^i x, T^j y)`, materialized once and
/// shared by the kernels evaluated on the pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCosts {
    n: usize,
    data: Vec<f64>,
}

impl PairCosts {
    pub fn new(ox: &OrbitSegment, oy: &OrbitSegment) -> Result<PairCosts> {
        let n = check_pair(ox, oy)?;
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            data.extend((0..n).map(|j| ox.distance(i, oy, j)));
        }
        Ok(PairCosts { n, data })
    }

    /// Builds from an explicit row-major matrix.
    pub fn from_matrix(n: usize, data: Vec<f64>) -> Result<PairCosts> {
        if n == 0 || data.len() != n * n {
            return Err(domain("cost matrix must be n × n with n ≥ 1"));
        }
        Ok(PairCosts { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn transpose(&self) -> PairCosts {
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[j * n + i] = self.data[i * n + j];
            }
        }
        PairCosts { n, data }
    }

    pub fn bowen(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).fold(0.0, f64::max)
    }

    /// Average aligned cost. Summation rounding can push the average of
    /// equal costs one ulp above their common value, so it is capped at the maximum.
    pub fn mean(&self) -> f64 {
        let avg = (0..self.n).map(|i| self.get(i, i)).sum::<f64>() / self.n as f64;
        avg.min(self.bowen())
    }

    /// Size of a largest order-preserving match with costs `< delta`.
    pub fn ordered_match_size(&self, delta: f64) -> usize {
        ordered_match_size(self.n, self.n, |i, j| self.get(i, j) < delta)
    }

    /// A largest order-preserving match with costs `< delta`, with witness indices.
    pub fn ordered_match(&self, delta: f64) -> Match {
        let (domain, range) = ordered_match_witness(self.n, |i, j| self.get(i, j) < delta);
        Match { flavor: Flavor::Ordered, domain, range, threshold: delta, n: self.n }
    }

    /// Size of a maximum (not necessarily order-preserving) match with costs `< delta`.
    pub fn unordered_match_size(&self, delta: f64) -> usize {
        self.unordered_match(delta).size()
    }

    pub fn unordered_match(&self, delta: f64) -> Match {
        let n = self.n;
        let adjacency: Vec<Vec<usize>> = (0..n).map(|i| (0..n).filter(|&j| self.get(i, j) < delta).collect()).collect();
        let mut pairs = max_bipartite_matching(n, &adjacency);
        pairs.sort_unstable();
        let (domain, range) = pairs.into_iter().unzip();
        Match { flavor: Flavor::Unordered, domain, range, threshold: delta, n }
    }

    /// `f̄_{n,δ}`.
    pub fn fbar(&self, delta: f64) -> f64 {
        deficiency(self.ordered_match_size(delta), self.n)
    }

    /// `f̃_{n,δ}`.
    pub fn ftilde(&self, delta: f64) -> f64 {
        deficiency(self.unordered_match_size(delta), self.n)
    }

    /// Upper end of the bisection bracket.
    fn bracket(&self) -> f64 {
        self.data.iter().copied().fold(1.0, f64::max)
    }

    pub fn fk(&self, resolution: Resolution) -> f64 {
        match resolution {
            Resolution::Bisection(tol) => bisect(self.bracket() + tol, tol, |d| self.fbar(d) < d),
            Resolution::Exact => {
                self.exact_infimum(|level| ordered_match_size(self.n, self.n, |i, j| self.get(i, j) <= level))
            }
        }
    }

    pub fn fk_unordered(&self, resolution: Resolution) -> f64 {
        match resolution {
            Resolution::Bisection(tol) => bisect(self.bracket() + tol, tol, |d| self.ftilde(d) < d),
            Resolution::Exact => self.exact_infimum(|level| {
                let adjacency: Vec<Vec<usize>> =
                    (0..self.n).map(|i| (0..self.n).filter(|&j| self.get(i, j) <= level).collect()).collect();
                max_bipartite_matching(self.n, &adjacency).len()
            }),
        }
    }

    /// `inf{δ : f(δ) < δ}` where `f(δ)` is the deficiency of the match using
    /// costs `< δ`, given `size_at(L)` = match size using costs `≤ L`.
    ///
    /// On `(L_k, L_{k+1}]` between consecutive distinct levels (0 and the
    /// costs) the deficiency is the constant `c_k` from `size_at(L_k)`, so
    /// the admissible set there is `(max(L_k, c_k), L_{k+1}]`. Feasibility
    /// `c_k < L_{k+1}` is monotone in `k`, so binary search finds the first
    /// admissible interval.
    fn exact_infimum(&self, size_at: impl Fn(f64) -> usize) -> f64 {
        let mut levels: Vec<f64> = self.data.iter().copied().chain(std::iter::once(0.0)).collect();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        let c = |k: usize| deficiency(size_at(levels[k]), self.n);
        let feasible = |k: usize| levels.get(k + 1).is_none_or(|&next| c(k) < next);
        let (mut lo, mut hi) = (0usize, levels.len() - 1);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if feasible(mid) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        levels[lo].max(c(lo))
    }

    /// `F_n`, the optimal assignment cost divided by `n`.
    ///
    /// The assignment is solved on whichever of the matrix and its transpose
    /// is lexicographically smaller, so swapping the orbits yields the same
    /// floating-point result.
    pub fn weak_mean(&self) -> f64 {
        let t = self.transpose();
        let canonical = match lex_cmp(&self.data, &t.data) {
            Ordering::Greater => &t,
            _ => self,
        };
        let assignment = min_cost_assignment(canonical.n, &canonical.data);
        assignment.iter().enumerate().map(|(i, &j)| canonical.get(i, j)).sum::<f64>() / self.n as f64
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

/// Smallest `δ` in `[0, hi]` (to within `tol`) with `pred(δ)`, for a
/// predicate that is false at 0 and monotone. Returns the upper end of the
/// final bracket.
fn bisect(mut hi: f64, tol: f64, pred: impl Fn(f64) -> bool) -> f64 {
    let mut lo = 0.0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Longest order-preserving pairing of `0..rows` with `0..cols` along
/// admissible `edge(i, j)`, by the LCS recurrence with one rolling row.
pub fn ordered_match_size(rows: usize, cols: usize, edge: impl Fn(usize, usize) -> bool) -> usize {
    let mut prev = vec![0u32; cols + 1];
    let mut cur = vec![0u32; cols + 1];
    for i in 0..rows {
        cur[0] = 0;
        for j in 0..cols {
            let diag = prev[j] + edge(i, j) as u32;
            cur[j + 1] = diag.max(prev[j + 1]).max(cur[j]);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[cols] as usize
}

/// Whether an order-preserving match of size at least `n - slack` exists.
///
/// Such a match only pairs indices with `|i - j| ≤ slack`, so the DP is
/// confined to that band: `O(n · slack)` instead of `O(n²)`.
pub fn ordered_match_reaches(n: usize, slack: usize, edge: impl Fn(usize, usize) -> bool) -> bool {
    if slack >= n {
        return true;
    }
    let need = (n - slack) as u32;
    // Cells outside the band keep stale values from earlier rows; those are
    // sizes of valid matches, so the result never exceeds the true optimum
    // and never falls below the band-restricted one.
    let mut prev = vec![0u32; n + 1];
    let mut cur = vec![0u32; n + 1];
    for i in 0..n {
        let lo = i.saturating_sub(slack);
        let hi = (i + slack).min(n - 1);
        cur[lo] = cur[lo].max(prev[lo]);
        for j in lo..=hi {
            let diag = prev[j] + edge(i, j) as u32;
            cur[j + 1] = diag.max(prev[j + 1]).max(cur[j]);
        }
        // even matching every remaining row cannot reach `need`
        if cur[hi + 1] + ((n - 1 - i) as u32) < need {
            return false;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[n] >= need
}

fn ordered_match_witness(n: usize, edge: impl Fn(usize, usize) -> bool) -> (Vec<usize>, Vec<usize>) {
    let w = n + 1;
    let mut table = vec![0u32; w * w];
    for i in 0..n {
        for j in 0..n {
            let diag = table[i * w + j] + edge(i, j) as u32;
            table[(i + 1) * w + j + 1] = diag.max(table[i * w + j + 1]).max(table[(i + 1) * w + j]);
        }
    }
    let (mut domain, mut range) = (Vec::new(), Vec::new());
    let (mut i, mut j) = (n, n);
    while i > 0 && j > 0 {
        let here = table[i * w + j];
        if here == table[(i - 1) * w + j] {
            i -= 1;
        } else if here == table[i * w + j - 1] {
            j -= 1;
        } else {
            debug_assert!(edge(i - 1, j - 1));
            domain.push(i - 1);
            range.push(j - 1);
            i -= 1;
            j -= 1;
        }
    }
    domain.reverse();
    range.reverse();
    (domain, range)
}

/// Hopcroft-Karp maximum matching; `adjacency[i]` lists the right vertices
/// joined to left vertex `i`. Returns the matched `(left, right)` pairs.
pub fn max_bipartite_matching(right: usize, adjacency: &[Vec<usize>]) -> Vec<(usize, usize)> {
    const FREE: usize = usize::MAX;
    let left = adjacency.len();
    let mut mate_left = vec![FREE; left];
    let mut mate_right = vec![FREE; right];
    let mut dist = vec![0usize; left];

    loop {
        // BFS layering from free left vertices
        let mut queue = VecDeque::new();
        for i in 0..left {
            if mate_left[i] == FREE {
                dist[i] = 0;
                queue.push_back(i);
            } else {
                dist[i] = FREE;
            }
        }
        let mut found = false;
        while let Some(i) = queue.pop_front() {
            for &j in &adjacency[i] {
                let k = mate_right[j];
                if k == FREE {
                    found = true;
                } else if dist[k] == FREE {
                    dist[k] = dist[i] + 1;
                    queue.push_back(k);
                }
            }
        }
        if !found {
            break;
        }
        let mut augmented = false;
        for i in 0..left {
            if mate_left[i] == FREE && augment(i, adjacency, &mut mate_left, &mut mate_right, &mut dist) {
                augmented = true;
            }
        }
        if !augmented {
            break;
        }
    }
    mate_left.iter().enumerate().filter(|(_, &j)| j != FREE).map(|(i, &j)| (i, j)).collect()
}

fn augment(
    i: usize,
    adjacency: &[Vec<usize>],
    mate_left: &mut [usize],
    mate_right: &mut [usize],
    dist: &mut [usize],
) -> bool {
    for &j in &adjacency[i] {
        let k = mate_right[j];
        let ok = k == usize::MAX
            || (dist[k] == dist[i].wrapping_add(1) && augment(k, adjacency, mate_left, mate_right, dist));
        if ok {
            mate_left[i] = j;
            mate_right[j] = i;
            return true;
        }
    }
    dist[i] = usize::MAX;
    false
}

/// Minimum-cost perfect assignment on a square row-major matrix
/// (Kuhn-Munkres with potentials, `O(n³)`). Returns `row -> column`.
pub fn min_cost_assignment(n: usize, cost: &[f64]) -> Vec<usize> {
    assert_eq!(cost.len(), n * n);
    // 1-based arrays; column 0 is the virtual source.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0f64; n + 1];
    let mut used = vec![false; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut j0 = 0usize;
        minv.iter_mut().for_each(|m| *m = f64::INFINITY);
        used.iter_mut().for_each(|b| *b = false);
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            let base = (i0 - 1) * n;
            for j in 1..=n {
                if !used[j] {
                    let reduced = cost[base + j - 1] - u[i0] - v[j];
                    if reduced < minv[j] {
                        minv[j] = reduced;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if owner[j] > 0 {
            assignment[owner[j] - 1] = j - 1;
        }
    }
    assignment
}

/// `d_n(x, y)`.
pub fn bowen_distance(ox: &OrbitSegment, oy: &OrbitSegment) -> Result<f64> {
    let n = check_pair(ox, oy)?;
    Ok((0..n).map(|i| ox.distance(i, oy, i)).fold(0.0, f64::max))
}

/// `d̄_n(x, y)`.
pub fn mean_distance(ox: &OrbitSegment, oy: &OrbitSegment) -> Result<f64> {
    let n = check_pair(ox, oy)?;
    Ok((0..n).map(|i| ox.distance(i, oy, i)).sum::<f64>() / n as f64)
}

fn check_threshold(delta: f64) -> Result<()> {
    if delta > 0.0 && !delta.is_nan() {
        Ok(())
    } else {
        Err(domain(format!("match threshold must be positive, got {delta}")))
    }
}

/// Largest order-preserving `(n, δ)`-match, with witness indices.
pub fn max_ordered_match(ox: &OrbitSegment, oy: &OrbitSegment, delta: f64) -> Result<Match> {
    check_threshold(delta)?;
    Ok(PairCosts::new(ox, oy)?.ordered_match(delta))
}

/// Largest `(n, δ)*`-match (order not required), with witness indices.
pub fn max_unordered_match(ox: &OrbitSegment, oy: &OrbitSegment, delta: f64) -> Result<Match> {
    check_threshold(delta)?;
    Ok(PairCosts::new(ox, oy)?.unordered_match(delta))
}

/// `d_FKn(x, y)` to within `tol`.
pub fn fk_distance(ox: &OrbitSegment, oy: &OrbitSegment, tol: f64) -> Result<f64> {
    let resolution = Resolution::Bisection(tol).check()?;
    Ok(PairCosts::new(ox, oy)?.fk(resolution))
}

/// `d_FKn(x, y)` by the exact threshold scan.
pub fn fk_distance_exact(ox: &OrbitSegment, oy: &OrbitSegment) -> Result<f64> {
    Ok(PairCosts::new(ox, oy)?.fk(Resolution::Exact))
}

/// `d̃_FKn(x, y)` to within `tol`.
pub fn fk_unordered_distance(ox: &OrbitSegment, oy: &OrbitSegment, tol: f64) -> Result<f64> {
    let resolution = Resolution::Bisection(tol).check()?;
    Ok(PairCosts::new(ox, oy)?.fk_unordered(resolution))
}

/// `F_n(x, y)`.
pub fn weak_mean_distance(ox: &OrbitSegment, oy: &OrbitSegment) -> Result<f64> {
    Ok(PairCosts::new(ox, oy)?.weak_mean())
}

/// Any of the orbit metrics.
pub fn orbit_distance(kind: MetricKind, ox: &OrbitSegment, oy: &OrbitSegment, resolution: Resolution) -> Result<f64> {
    let resolution = resolution.check()?;
    match kind {
        MetricKind::Bowen => bowen_distance(ox, oy),
        MetricKind::Mean => mean_distance(ox, oy),
        MetricKind::FK => Ok(PairCosts::new(ox, oy)?.fk(resolution)),
        MetricKind::FKUnordered => Ok(PairCosts::new(ox, oy)?.fk_unordered(resolution)),
        MetricKind::WeakMean => weak_mean_distance(ox, oy),
    }
}

/// Whether a radius bound is `d ≤ r` or `d < r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ball {
    Closed,
    Open,
}

/// Decides `d(x, y) ≤ r` (closed) or `d(x, y) < r` (open) exactly, without
/// computing the distance.
///
/// For the FK distances: `d_FKn ≤ r` iff the deficiency of the best match
/// using costs `≤ r` is at most `r`, and `d_FKn < r` iff `f̄_{n,r} < r`.
/// Both are single match computations; the ordered one runs in a band.
pub fn within(kind: MetricKind, ox: &OrbitSegment, oy: &OrbitSegment, r: f64, ball: Ball) -> Result<bool> {
    let n = check_pair(ox, oy)?;
    let closed = ball == Ball::Closed;
    let inside = |d: f64| if closed { d <= r } else { d < r };
    let edge = |i: usize, j: usize| inside(ox.distance(i, oy, j));
    Ok(match kind {
        MetricKind::Bowen => (0..n).all(|i| edge(i, i)),
        MetricKind::Mean => inside(mean_distance(ox, oy)?),
        MetricKind::FK => match slack(n, r, closed) {
            None => false,
            Some(s) => ordered_match_reaches(n, s, edge),
        },
        MetricKind::FKUnordered => match slack(n, r, closed) {
            None => false,
            Some(s) => {
                let adjacency: Vec<Vec<usize>> = (0..n).map(|i| (0..n).filter(|&j| edge(i, j)).collect()).collect();
                max_bipartite_matching(n, &adjacency).len() + s >= n
            }
        },
        MetricKind::WeakMean => weak_mean_within(ox, oy, n, r, closed),
    })
}

/// `F_n ≤ r` / `F_n < r`, skipping the assignment when cheap bounds decide it.
fn weak_mean_within(ox: &OrbitSegment, oy: &OrbitSegment, n: usize, r: f64, closed: bool) -> bool {
    const MARGIN: f64 = 1e-12;
    let nf = n as f64;
    // identity permutation: upper bound
    let diagonal = (0..n).map(|i| ox.distance(i, oy, i)).sum::<f64>() / nf;
    if diagonal < r - MARGIN {
        return true;
    }
    let costs = PairCosts::new(ox, oy).expect("pair checked");
    // every row and every column pays at least its minimum: lower bounds
    let row_min: f64 = (0..n).map(|i| (0..n).map(|j| costs.get(i, j)).fold(f64::INFINITY, f64::min)).sum();
    let col_min: f64 = (0..n).map(|j| (0..n).map(|i| costs.get(i, j)).fold(f64::INFINITY, f64::min)).sum();
    if row_min.max(col_min) / nf > r + MARGIN {
        return false;
    }
    let f = costs.weak_mean();
    if closed {
        f <= r
    } else {
        f < r
    }
}

/// Edit distance `f̄_n(w, w') = 1 - LCS(w, w') / n` on equal-length words.
pub fn word_edit_distance(w: &Word, w2: &Word) -> Result<f64> {
    if w.len() != w2.len() {
        return Err(domain(format!("word lengths differ: {} vs {}", w.len(), w2.len())));
    }
    if w.is_empty() {
        return Err(domain("words must be nonempty"));
    }
    let n = w.len();
    let lcs = ordered_match_size(n, n, |i, j| w.0[i] == w2.0[j]);
    Ok(deficiency(lcs, n))
}

/// Whether `f̄_n(w, w') < eps`, using the banded LCS.
pub fn words_within(w: &Word, w2: &Word, eps: f64) -> Result<bool> {
    if w.len() != w2.len() || w.is_empty() {
        return Err(domain("words must be nonempty and of equal length"));
    }
    let n = w.len();
    Ok(match slack(n, eps, false) {
        None => false,
        Some(s) => ordered_match_reaches(n, s, |i, j| w.0[i] == w2.0[j]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{MeasureSpec, Point, System, SystemSpec};

    fn rot(alpha: f64) -> System {
        System::new(SystemSpec::Rotation { alpha }).unwrap()
    }

    fn orbit(s: &System, x: f64, n: usize) -> OrbitSegment {
        s.orbit(&Point::Real(x), n).unwrap()
    }

    const TOL: f64 = 1e-9;

    #[test]
    fn bowen_and_mean_examples() {
        let d = System::new(SystemSpec::Doubling { horizon: None }).unwrap();
        let (a, b) = (orbit(&d, 0.0, 2), orbit(&d, 0.5, 2));
        assert_eq!(bowen_distance(&a, &b).unwrap(), 0.5);
        assert_eq!(mean_distance(&a, &b).unwrap(), 0.25);
        assert_eq!(bowen_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(mean_distance(&a, &a).unwrap(), 0.0);
        let r = rot(0.3);
        for n in [1, 5, 40] {
            let (x, y) = (orbit(&r, 0.1, n), orbit(&r, 0.25, n));
            assert!((bowen_distance(&x, &y).unwrap() - 0.15).abs() < 1e-12);
        }
        assert!(bowen_distance(&orbit(&r, 0.1, 3), &orbit(&r, 0.1, 4)).is_err());
    }

    #[test]
    fn half_rotation_matches() {
        let r = rot(0.5);
        let (x, y) = (orbit(&r, 0.0, 2), orbit(&r, 0.5, 2));
        let m = max_ordered_match(&x, &y, 0.1).unwrap();
        assert_eq!(m.size(), 1);
        assert_eq!(m.deficiency(), 0.5);
        let u = max_unordered_match(&x, &y, 0.1).unwrap();
        assert_eq!(u.size(), 2);
        assert_eq!(u.deficiency(), 0.0);
        assert!((fk_distance(&x, &y, TOL).unwrap() - 0.5).abs() <= TOL);
        assert_eq!(fk_distance_exact(&x, &y).unwrap(), 0.5);
        assert!(fk_unordered_distance(&x, &y, TOL).unwrap() <= TOL);
        let (x, y) = (orbit(&r, 0.0, 2), orbit(&r, 0.25, 2));
        assert_eq!(weak_mean_distance(&x, &y).unwrap(), 0.25);
    }

    #[test]
    fn large_threshold_gives_full_match() {
        let r = rot(0.1234);
        let (x, y) = (orbit(&r, 0.0, 9), orbit(&r, 0.4, 9));
        assert_eq!(max_ordered_match(&x, &y, 0.51).unwrap().size(), 9);
        assert!(max_ordered_match(&x, &y, 0.0).is_err());
        assert!(max_unordered_match(&x, &y, -1.0).is_err());
        assert!(fk_distance(&x, &y, 0.0).is_err());
    }

    #[test]
    fn shifted_alternating_sequences() {
        let s = System::new(SystemSpec::FullShift { k: 2, horizon: Some(32) }).unwrap();
        let alt: Vec<u8> = (0..32).map(|i| (i % 2) as u8).collect();
        let x = s.symbol_point(&alt).unwrap();
        let y = s.apply(&x).unwrap();
        let (ox, oy) = (s.orbit(&x, 4).unwrap(), s.orbit(&y, 4).unwrap());
        assert!((fk_distance(&ox, &oy, TOL).unwrap() - 0.25).abs() <= TOL);
        assert_eq!(fk_distance_exact(&ox, &oy).unwrap(), 0.25);
    }

    #[test]
    fn identity_rotation_weak_mean_equals_point_distance() {
        let r = rot(0.0);
        for n in [1, 3, 17] {
            let (x, y) = (orbit(&r, 0.05, n), orbit(&r, 0.3, n));
            assert!((weak_mean_distance(&x, &y).unwrap() - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn word_edit_examples() {
        let w = |s: &str| Word(s.bytes().map(|b| (b - b'0') as u32).collect());
        assert_eq!(word_edit_distance(&w("0110"), &w("0110")).unwrap(), 0.0);
        assert_eq!(word_edit_distance(&w("0101"), &w("1010")).unwrap(), 0.25);
        assert_eq!(word_edit_distance(&w("0000"), &w("1111")).unwrap(), 1.0);
        assert!(word_edit_distance(&w("01"), &w("011")).is_err());
        assert!(words_within(&w("0101"), &w("1010"), 0.26).unwrap());
        assert!(!words_within(&w("0101"), &w("1010"), 0.25).unwrap());
    }

    #[test]
    fn bisection_and_exact_agree() {
        let s = System::new(SystemSpec::FullShift { k: 2, horizon: Some(64) }).unwrap();
        let mu = s.sample_points(&MeasureSpec::Lebesgue, 20, 5).unwrap();
        let r = rot(0.618_033_988_7);
        let nu = r.sample_points(&MeasureSpec::Lebesgue, 20, 5).unwrap();
        for (sys, m) in [(&s, &mu), (&r, &nu)] {
            for pair in m.points.chunks(2) {
                for n in [1, 4, 13] {
                    let (ox, oy) = (sys.orbit(&pair[0], n).unwrap(), sys.orbit(&pair[1], n).unwrap());
                    let c = PairCosts::new(&ox, &oy).unwrap();
                    let (b, e) = (c.fk(Resolution::Bisection(TOL)), c.fk(Resolution::Exact));
                    assert!((b - e).abs() <= TOL, "{b} vs {e}");
                    let (b, e) = (c.fk_unordered(Resolution::Bisection(TOL)), c.fk_unordered(Resolution::Exact));
                    assert!((b - e).abs() <= TOL, "{b} vs {e}");
                }
            }
        }
    }

    #[test]
    fn within_agrees_with_exact_distance() {
        let s = System::new(SystemSpec::FullShift { k: 2, horizon: Some(64) }).unwrap();
        let mu = s.sample_points(&MeasureSpec::Bernoulli { probs: vec![0.8, 0.2] }, 30, 9).unwrap();
        let radii = [0.05, 0.1, 0.125, 0.25, 0.3, 0.5, 1.0];
        for pair in mu.points.chunks(2) {
            for n in [3, 8, 10, 20] {
                let (ox, oy) = (s.orbit(&pair[0], n).unwrap(), s.orbit(&pair[1], n).unwrap());
                let c = PairCosts::new(&ox, &oy).unwrap();
                let fk = c.fk(Resolution::Exact);
                let fku = c.fk_unordered(Resolution::Exact);
                let fw = c.weak_mean();
                for r in radii {
                    assert_eq!(
                        within(MetricKind::FK, &ox, &oy, r, Ball::Closed).unwrap(),
                        fk <= r,
                        "n={n} r={r} fk={fk}"
                    );
                    assert_eq!(within(MetricKind::FK, &ox, &oy, r, Ball::Open).unwrap(), fk < r, "n={n} r={r} fk={fk}");
                    assert_eq!(within(MetricKind::FKUnordered, &ox, &oy, r, Ball::Closed).unwrap(), fku <= r);
                    assert_eq!(within(MetricKind::FKUnordered, &ox, &oy, r, Ball::Open).unwrap(), fku < r);
                    assert_eq!(within(MetricKind::WeakMean, &ox, &oy, r, Ball::Closed).unwrap(), fw <= r);
                }
            }
        }
    }

    #[test]
    fn slack_matches_deficiency_comparisons() {
        for n in 1..40 {
            for eps in [0.0, 0.05, 0.1, 0.2, 0.25, 1.0 / 3.0, 0.5, 0.99, 1.0, 1.5] {
                for closed in [true, false] {
                    let brute = (0..=n)
                        .filter(|&u| {
                            let f = deficiency(n - u, n);
                            if closed {
                                f <= eps
                            } else {
                                f < eps
                            }
                        })
                        .max();
                    assert_eq!(slack(n, eps, closed), brute, "n={n} eps={eps} closed={closed}");
                }
            }
        }
    }

    #[test]
    fn assignment_handles_small_cases() {
        assert_eq!(min_cost_assignment(1, &[3.0]), vec![0]);
        let a = min_cost_assignment(3, &[4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0]);
        let cost: f64 =
            a.iter().enumerate().map(|(i, &j)| [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0][i * 3 + j]).sum();
        assert_eq!(cost, 5.0);
    }

    #[test]
    fn metric_kind_names_round_trip() {
        for k in MetricKind::ALL {
            assert_eq!(k.name().parse::<MetricKind>().unwrap(), k);
        }
        assert!("manhattan".parse::<MetricKind>().is_err());
    }
}
