//! Phase spaces, maps and metrics.
//!
//! Built-in systems:
//!
//! | kind            | space                   | map                    | metric                         |
//! |-----------------|-------------------------|------------------------|--------------------------------|
//! | `full_shift`    | `{0..k-1}^H`            | left shift             | `2^-(first difference)`        |
//! | `rotation`      | circle `[0,1)`          | `x + α mod 1`          | circle, diameter 1/2           |
//! | `doubling`      | circle `[0,1)`          | `2x mod 1`             | circle, diameter 1/2           |
//! | `tent`          | interval `[0,1]`        | `1 - |2x - 1|`         | `|x - y|`, diameter 1          |
//! | `logistic`      | interval `[0,1]`        | `4x(1-x)`              | `|x - y|`, diameter 1          |
//! | `two_component` | disjoint union of two   | componentwise          | inner metric, `1` across parts |
//!
//! Shift points are finite symbol arrays of length `H` (the horizon); two
//! points agreeing through the horizon are at distance 0, which misstates
//! the true distance by at most `2^-(H - n)` after `n` shifts.
//!
//! Doubling and tent points are carried as binary expansions of length `H`
//! rather than `f64`s: a double is a dyadic rational and its doubling orbit
//! reaches 0 after at most 53 steps. The expansion is shifted (and for the
//! tent map complemented) exactly; coordinates are read from the leading
//! 53 digits.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, domain};
use crate::rng;
use crate::{Error, Result};

/// Symbol horizon used when a shift spec does not set one (`2 * 64 + 32`).
pub const DEFAULT_SHIFT_HORIZON: usize = 160;
/// Digit horizon used for doubling/tent when the spec does not set one.
pub const DEFAULT_DIGIT_HORIZON: usize = 320;
/// Mantissa digits read when converting an expansion to a coordinate.
const MANTISSA_DIGITS: usize = 53;

fn half() -> f64 {
    0.5
}

/// Serializable description of a system, e.g. `{"kind": "full_shift", "k": 2, "horizon": 96}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemSpec {
    FullShift {
        k: u8,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        horizon: Option<usize>,
    },
    Rotation {
        alpha: f64,
    },
    Doubling {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        horizon: Option<usize>,
    },
    Tent {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        horizon: Option<usize>,
    },
    Logistic,
    TwoComponent {
        a: Box<SystemSpec>,
        b: Box<SystemSpec>,
        #[serde(default = "half")]
        weight_a: f64,
    },
}

impl SystemSpec {
    pub fn metric(&self) -> MetricDescriptor {
        match self {
            SystemSpec::FullShift { .. } => MetricDescriptor::FirstDifference,
            SystemSpec::Rotation { .. } | SystemSpec::Doubling { .. } => MetricDescriptor::Circle,
            SystemSpec::Tent { .. } | SystemSpec::Logistic => MetricDescriptor::Interval,
            SystemSpec::TwoComponent { .. } => MetricDescriptor::Components,
        }
    }

    /// Fills in unset horizons so that orbits of length `n_max` fit:
    /// `2 * n_max + 32` symbols for shifts, `2 * n_max + 64` digits for
    /// doubling and tent.
    pub fn with_horizon_for(&self, n_max: usize) -> SystemSpec {
        match self {
            SystemSpec::FullShift { k, horizon: None } => {
                SystemSpec::FullShift { k: *k, horizon: Some(2 * n_max + 32) }
            }
            SystemSpec::Doubling { horizon: None } => SystemSpec::Doubling { horizon: Some(2 * n_max + 64) },
            SystemSpec::Tent { horizon: None } => SystemSpec::Tent { horizon: Some(2 * n_max + 64) },
            SystemSpec::TwoComponent { a, b, weight_a } => SystemSpec::TwoComponent {
                a: Box::new(a.with_horizon_for(n_max)),
                b: Box::new(b.with_horizon_for(n_max)),
                weight_a: *weight_a,
            },
            other => other.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricDescriptor {
    /// `2^-min{i : x_i != y_i}` on one-sided sequences.
    FirstDifference,
    /// `min(|x-y|, 1-|x-y|)`.
    Circle,
    /// `|x-y|`.
    Interval,
    /// Inner metric within a component, 1 across components.
    Components,
}

/// An element of a phase space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Point {
    /// Coordinate of a rotation or logistic point.
    Real(f64),
    /// One-sided symbol sequence truncated at the horizon.
    Symbols(Vec<u8>),
    /// Binary expansion `0.d0 d1 d2 ...` of a doubling or tent point.
    Digits(Vec<u8>),
    /// Point of one part of a two-component system.
    Component { index: u8, inner: Box<Point> },
}

impl Point {
    /// Real coordinate, if the point has one.
    pub fn coordinate(&self) -> Option<f64> {
        match self {
            Point::Real(x) => Some(*x),
            Point::Digits(d) => Some(digits_value(d, 0, false)),
            _ => None,
        }
    }
}

/// Coordinate of the expansion starting at `start`, complemented when `flip` is set.
fn digits_value(digits: &[u8], start: usize, flip: bool) -> f64 {
    let mut v: u64 = 0;
    for k in 0..MANTISSA_DIGITS {
        let bit = digits.get(start + k).copied().unwrap_or(0) ^ flip as u8;
        v = (v << 1) | bit as u64;
    }
    v as f64 / (1u64 << MANTISSA_DIGITS) as f64
}

/// Exact binary expansion of `x ∈ [0,1)`, zero padded to `horizon` digits.
fn digits_of(x: f64, horizon: usize) -> Vec<u8> {
    let mut out = vec![0u8; horizon];
    let mut r = x;
    for d in out.iter_mut() {
        if r == 0.0 {
            break;
        }
        r *= 2.0;
        if r >= 1.0 {
            *d = 1;
            r -= 1.0;
        }
    }
    out
}

fn circle_distance(x: f64, y: f64) -> f64 {
    let d = (x - y).abs();
    d.min(1.0 - d)
}

/// `2^-j` for the first index `j` where the sequences differ, 0 if they
/// agree on their common length.
fn first_difference_distance(a: &[u8], b: &[u8]) -> f64 {
    match a.iter().zip(b).position(|(s, t)| s != t) {
        Some(j) => 0.5f64.powi(j as i32),
        None => 0.0,
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Dynamics {
    Shift { k: u8, horizon: usize },
    Rotation { alpha: f64 },
    Doubling { horizon: usize },
    Tent { horizon: usize },
    Logistic,
    TwoComponent { parts: Box<[System; 2]>, weight_a: f64 },
}

/// A validated system: map, metric and diameter.
#[derive(Debug, Clone, PartialEq)]
pub struct System {
    spec: SystemSpec,
    dynamics: Dynamics,
}

impl System {
    pub fn new(spec: SystemSpec) -> Result<System> {
        let dynamics = match &spec {
            SystemSpec::FullShift { k, horizon } => {
                if *k < 2 {
                    return Err(config(format!("full shift needs an alphabet of at least 2 symbols, got {k}")));
                }
                let horizon = horizon.unwrap_or(DEFAULT_SHIFT_HORIZON);
                if horizon < 2 {
                    return Err(config(format!("horizon must be at least 2, got {horizon}")));
                }
                Dynamics::Shift { k: *k, horizon }
            }
            SystemSpec::Rotation { alpha } => {
                if !(alpha.is_finite() && (0.0..1.0).contains(alpha)) {
                    return Err(config(format!("rotation angle must lie in [0,1), got {alpha}")));
                }
                Dynamics::Rotation { alpha: *alpha }
            }
            SystemSpec::Doubling { horizon } | SystemSpec::Tent { horizon } => {
                let horizon = horizon.unwrap_or(DEFAULT_DIGIT_HORIZON);
                if horizon < 2 {
                    return Err(config(format!("horizon must be at least 2, got {horizon}")));
                }
                if matches!(spec, SystemSpec::Doubling { .. }) {
                    Dynamics::Doubling { horizon }
                } else {
                    Dynamics::Tent { horizon }
                }
            }
            SystemSpec::Logistic => Dynamics::Logistic,
            SystemSpec::TwoComponent { a, b, weight_a } => {
                if !(weight_a.is_finite() && *weight_a > 0.0 && *weight_a < 1.0) {
                    return Err(config(format!("mixture weight must lie in (0,1), got {weight_a}")));
                }
                let parts = [System::new((**a).clone())?, System::new((**b).clone())?];
                if parts.iter().any(|p| matches!(p.dynamics, Dynamics::TwoComponent { .. })) {
                    return Err(config("two-component systems do not nest"));
                }
                Dynamics::TwoComponent { parts: Box::new(parts), weight_a: *weight_a }
            }
        };
        Ok(System { spec, dynamics })
    }

    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    pub fn metric(&self) -> MetricDescriptor {
        self.spec.metric()
    }

    pub fn diameter(&self) -> f64 {
        match &self.dynamics {
            Dynamics::Shift { .. } | Dynamics::Tent { .. } | Dynamics::Logistic => 1.0,
            Dynamics::Rotation { .. } | Dynamics::Doubling { .. } => 0.5,
            Dynamics::TwoComponent { parts, .. } => parts.iter().map(System::diameter).fold(1.0, f64::max),
        }
    }

    /// The measure a run uses when none is given: uniform Bernoulli on a
    /// shift, arcsine for the logistic map, Lebesgue otherwise.
    pub fn natural_measure(&self) -> MeasureSpec {
        match &self.dynamics {
            Dynamics::Shift { k, .. } => MeasureSpec::Bernoulli { probs: vec![1.0 / *k as f64; *k as usize] },
            Dynamics::Logistic => MeasureSpec::Arcsine,
            _ => MeasureSpec::Lebesgue,
        }
    }

    /// Coordinate horizon, for systems whose points are finite arrays.
    pub fn horizon(&self) -> Option<usize> {
        match &self.dynamics {
            Dynamics::Shift { horizon, .. } | Dynamics::Doubling { horizon } | Dynamics::Tent { horizon } => {
                Some(*horizon)
            }
            Dynamics::TwoComponent { parts, .. } => parts.iter().filter_map(System::horizon).min(),
            _ => None,
        }
    }

    pub fn alphabet(&self) -> Option<u8> {
        match self.dynamics {
            Dynamics::Shift { k, .. } => Some(k),
            _ => None,
        }
    }

    /// Builds a point of this space from a real coordinate. Doubling and
    /// tent coordinates are expanded exactly into binary digits.
    pub fn real_point(&self, x: f64) -> Result<Point> {
        let point = match &self.dynamics {
            Dynamics::Rotation { .. } | Dynamics::Logistic => Point::Real(x),
            Dynamics::Doubling { horizon } | Dynamics::Tent { horizon } => {
                check_unit(x)?;
                Point::Digits(digits_of(x, *horizon))
            }
            _ => return Err(domain("system points are not real coordinates")),
        };
        self.check_point(&point)?;
        Ok(point)
    }

    /// Builds a shift point from a symbol prefix, padding with zeros up to the horizon.
    pub fn symbol_point(&self, prefix: &[u8]) -> Result<Point> {
        let Dynamics::Shift { horizon, .. } = self.dynamics else {
            return Err(domain("system points are not symbol sequences"));
        };
        if prefix.len() > horizon {
            return Err(Error::Horizon { n: prefix.len(), horizon });
        }
        let mut s = prefix.to_vec();
        s.resize(horizon, 0);
        let point = Point::Symbols(s);
        self.check_point(&point)?;
        Ok(point)
    }

    /// Checks that `p` is a point of this space, converting real
    /// coordinates of doubling/tent systems into expansions.
    fn normalize(&self, p: &Point) -> Result<Point> {
        match (&self.dynamics, p) {
            (Dynamics::Doubling { .. } | Dynamics::Tent { .. }, Point::Real(x)) => self.real_point(*x),
            _ => {
                self.check_point(p)?;
                Ok(p.clone())
            }
        }
    }

    pub fn check_point(&self, p: &Point) -> Result<()> {
        match (&self.dynamics, p) {
            (Dynamics::Shift { k, horizon }, Point::Symbols(s)) => {
                if s.len() != *horizon {
                    return Err(domain(format!("symbol array has length {}, horizon is {horizon}", s.len())));
                }
                if let Some(bad) = s.iter().find(|&&c| c >= *k) {
                    return Err(domain(format!("symbol {bad} outside alphabet of size {k}")));
                }
                Ok(())
            }
            (Dynamics::Rotation { .. }, Point::Real(x)) => check_unit(*x),
            (Dynamics::Logistic, Point::Real(x)) => {
                if x.is_finite() && (0.0..=1.0).contains(x) {
                    Ok(())
                } else {
                    Err(domain(format!("coordinate {x} outside [0,1]")))
                }
            }
            (Dynamics::Doubling { horizon } | Dynamics::Tent { horizon }, Point::Digits(d)) => {
                if d.len() != *horizon {
                    return Err(domain(format!("expansion has {} digits, horizon is {horizon}", d.len())));
                }
                if d.iter().any(|&b| b > 1) {
                    return Err(domain("binary expansion digits must be 0 or 1"));
                }
                Ok(())
            }
            (Dynamics::TwoComponent { parts, .. }, Point::Component { index, inner }) => {
                match parts.get(*index as usize) {
                    Some(part) => part.check_point(inner),
                    None => Err(domain(format!("component index {index} out of range"))),
                }
            }
            _ => Err(domain("point does not belong to this system")),
        }
    }

    /// One application of the map.
    pub fn apply(&self, p: &Point) -> Result<Point> {
        let p = self.normalize(p)?;
        Ok(self.step(&p))
    }

    fn step(&self, p: &Point) -> Point {
        match (&self.dynamics, p) {
            (Dynamics::Shift { .. }, Point::Symbols(s)) => {
                // Symbols past the horizon are unknown; the array keeps its
                // length with a zero fill so the point stays well-formed.
                let mut t = s[1..].to_vec();
                t.push(0);
                Point::Symbols(t)
            }
            (Dynamics::Rotation { alpha }, Point::Real(x)) => Point::Real(rotate(*x, *alpha)),
            (Dynamics::Logistic, Point::Real(x)) => Point::Real(4.0 * x * (1.0 - x)),
            (Dynamics::Doubling { .. }, Point::Digits(d)) => {
                let mut t = d[1..].to_vec();
                t.push(0);
                Point::Digits(t)
            }
            (Dynamics::Tent { .. }, Point::Digits(d)) => {
                let flip = d[0];
                let mut t: Vec<u8> = d[1..].iter().map(|b| b ^ flip).collect();
                t.push(0);
                Point::Digits(t)
            }
            (Dynamics::TwoComponent { parts, .. }, Point::Component { index, inner }) => {
                Point::Component { index: *index, inner: Box::new(parts[*index as usize].step(inner)) }
            }
            _ => unreachable!("point validated against system"),
        }
    }

    /// Phase-space distance between two points of this system.
    pub fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        let p = self.normalize(p)?;
        let q = self.normalize(q)?;
        Ok(self.point_distance(&p, &q))
    }

    fn point_distance(&self, p: &Point, q: &Point) -> f64 {
        match (&self.dynamics, p, q) {
            (Dynamics::Shift { .. }, Point::Symbols(a), Point::Symbols(b)) => first_difference_distance(a, b),
            (Dynamics::Rotation { .. }, Point::Real(x), Point::Real(y)) => circle_distance(*x, *y),
            (Dynamics::Logistic, Point::Real(x), Point::Real(y)) => (x - y).abs(),
            (Dynamics::Doubling { .. }, Point::Digits(a), Point::Digits(b)) => {
                circle_distance(digits_value(a, 0, false), digits_value(b, 0, false))
            }
            (Dynamics::Tent { .. }, Point::Digits(a), Point::Digits(b)) => {
                (digits_value(a, 0, false) - digits_value(b, 0, false)).abs()
            }
            (
                Dynamics::TwoComponent { parts, .. },
                Point::Component { index: i, inner: a },
                Point::Component { index: j, inner: b },
            ) => {
                if i == j {
                    parts[*i as usize].point_distance(a, b)
                } else {
                    1.0
                }
            }
            _ => unreachable!("points validated against system"),
        }
    }

    /// The forward orbit `x, Tx, ..., T^(n-1)x`.
    pub fn orbit(&self, x: &Point, n: usize) -> Result<OrbitSegment> {
        if n == 0 {
            return Err(domain("orbit length must be positive"));
        }
        let base = self.normalize(x)?;
        let coords = self.orbit_coords(&base, n)?;
        Ok(OrbitSegment { base, len: n, coords })
    }

    fn orbit_coords(&self, base: &Point, n: usize) -> Result<Coords> {
        Ok(match (&self.dynamics, base) {
            (Dynamics::Shift { horizon, .. }, Point::Symbols(s)) => {
                if n > *horizon {
                    return Err(Error::Horizon { n, horizon: *horizon });
                }
                Coords::Shift(s.clone())
            }
            (Dynamics::Rotation { alpha }, Point::Real(x)) => {
                Coords::Circle(std::iter::successors(Some(*x), |&y| Some(rotate(y, *alpha))).take(n).collect())
            }
            (Dynamics::Logistic, Point::Real(x)) => {
                Coords::Interval(std::iter::successors(Some(*x), |&y| Some(4.0 * y * (1.0 - y))).take(n).collect())
            }
            (Dynamics::Doubling { horizon } | Dynamics::Tent { horizon }, Point::Digits(d)) => {
                if n > *horizon {
                    return Err(Error::Horizon { n, horizon: *horizon });
                }
                let tent = matches!(self.dynamics, Dynamics::Tent { .. });
                let values = (0..n).map(|i| digits_value(d, i, tent && i > 0 && d[i - 1] == 1)).collect();
                Coords::Digits { digits: d.clone(), tent, values }
            }
            (Dynamics::TwoComponent { parts, .. }, Point::Component { index, inner }) => {
                Coords::Component { index: *index, inner: Box::new(parts[*index as usize].orbit_coords(inner, n)?) }
            }
            _ => unreachable!("point validated against system"),
        })
    }

    /// Orbit segments of length `n` for every point of `measure`.
    pub fn orbits(&self, measure: &EmpiricalMeasure, n: usize) -> Result<Vec<OrbitSegment>> {
        measure.points.par_iter().map(|p| self.orbit(p, n)).collect()
    }

    /// Draws `count` points from `measure`, deterministically in `seed`.
    ///
    /// Supported measures: `Bernoulli` (shifts, one probability per
    /// symbol), `Lebesgue` (shifts as uniform Bernoulli, rotation, doubling,
    /// tent, and two-component systems where each part uses its own natural
    /// invariant measure), `Arcsine` (logistic, `x = sin²(πu/2)`).
    pub fn sample_points(&self, measure: &MeasureSpec, count: usize, seed: u64) -> Result<EmpiricalMeasure> {
        if count == 0 {
            return Err(config("sample size must be positive"));
        }
        measure.validate()?;
        let mut rng = rng::seeded(seed);
        let points = (0..count).map(|_| self.draw(measure, &mut rng)).collect::<Result<Vec<_>>>()?;
        Ok(EmpiricalMeasure { points, provenance: Provenance::IidSampler, seed })
    }

    fn draw(&self, measure: &MeasureSpec, rng: &mut rng::Rng) -> Result<Point> {
        match (&self.dynamics, measure) {
            (Dynamics::Shift { k, horizon }, MeasureSpec::Bernoulli { probs }) => {
                if probs.len() != *k as usize {
                    return Err(config(format!("Bernoulli measure has {} weights for {k} symbols", probs.len())));
                }
                Ok(Point::Symbols((0..*horizon).map(|_| pick(probs, rng.gen::<f64>())).collect()))
            }
            (Dynamics::Shift { k, horizon }, MeasureSpec::Lebesgue) => {
                Ok(Point::Symbols((0..*horizon).map(|_| rng.gen_range(0..*k)).collect()))
            }
            (Dynamics::Rotation { .. }, MeasureSpec::Lebesgue) => Ok(Point::Real(rng.gen::<f64>())),
            (Dynamics::Doubling { horizon } | Dynamics::Tent { horizon }, MeasureSpec::Lebesgue) => {
                Ok(Point::Digits((0..*horizon).map(|_| rng.gen_range(0..2u8)).collect()))
            }
            (Dynamics::Logistic, MeasureSpec::Arcsine) => {
                let u: f64 = rng.gen();
                Ok(Point::Real((std::f64::consts::FRAC_PI_2 * u).sin().powi(2)))
            }
            (Dynamics::TwoComponent { parts, weight_a }, MeasureSpec::Lebesgue) => {
                let index = if rng.gen::<f64>() < *weight_a { 0 } else { 1 };
                let part = &parts[index];
                let natural = match part.dynamics {
                    Dynamics::Logistic => MeasureSpec::Arcsine,
                    _ => MeasureSpec::Lebesgue,
                };
                Ok(Point::Component { index: index as u8, inner: Box::new(part.draw(&natural, rng)?) })
            }
            _ => Err(config(format!("measure {measure:?} is not supported on {:?}", self.spec))),
        }
    }

    /// Empirical measure made of the orbit `x, Tx, ..., T^(count-1)x`.
    pub fn orbit_measure(&self, x: &Point, count: usize) -> Result<EmpiricalMeasure> {
        if count == 0 {
            return Err(config("sample size must be positive"));
        }
        let mut p = self.normalize(x)?;
        let mut points = Vec::with_capacity(count);
        for _ in 0..count {
            let next = self.step(&p);
            points.push(p);
            p = next;
        }
        Ok(EmpiricalMeasure { points, provenance: Provenance::OrbitAverage, seed: 0 })
    }

    /// Word of cells visited by `x, ..., T^(n-1)x`.
    ///
    /// Interval bins are left-closed: a coordinate on the boundary `j/count`
    /// belongs to cell `j`.
    pub fn itinerary(&self, partition: &Partition, x: &Point, n: usize) -> Result<Word> {
        let orbit = self.orbit(x, n)?;
        orbit.itinerary(partition)
    }
}

fn check_unit(x: f64) -> Result<()> {
    if x.is_finite() && (0.0..1.0).contains(&x) {
        Ok(())
    } else {
        Err(domain(format!("coordinate {x} outside [0,1)")))
    }
}

fn rotate(x: f64, alpha: f64) -> f64 {
    let y = x + alpha;
    if y >= 1.0 {
        y - 1.0
    } else {
        y
    }
}

fn pick(probs: &[f64], u: f64) -> u8 {
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i as u8;
        }
    }
    (probs.len() - 1) as u8
}

/// Invariant measure to sample from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureSpec {
    Bernoulli { probs: Vec<f64> },
    Lebesgue,
    Arcsine,
}

impl MeasureSpec {
    pub fn validate(&self) -> Result<()> {
        if let MeasureSpec::Bernoulli { probs } = self {
            if probs.is_empty() || probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(config("Bernoulli weights must be finite and nonnegative"));
            }
            let total: f64 = probs.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(config(format!("Bernoulli weights sum to {total}, not 1")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    IidSampler,
    OrbitAverage,
}

/// Uniformly weighted finite point set standing in for an invariant measure.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    pub points: Vec<Point>,
    pub provenance: Provenance,
    pub seed: u64,
}

impl EmpiricalMeasure {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.points.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Coords {
    Circle(Vec<f64>),
    Interval(Vec<f64>),
    /// Expansion plus the coordinates read off it at each step.
    Digits {
        digits: Vec<u8>,
        tent: bool,
        values: Vec<f64>,
    },
    /// The base sequence; the i-th orbit point is its suffix from `i`.
    Shift(Vec<u8>),
    Component {
        index: u8,
        inner: Box<Coords>,
    },
}

impl Coords {
    fn same_space(&self, other: &Coords) -> bool {
        match (self, other) {
            (Coords::Circle(_), Coords::Circle(_))
            | (Coords::Interval(_), Coords::Interval(_))
            | (Coords::Shift(_), Coords::Shift(_)) => true,
            (Coords::Digits { tent: a, .. }, Coords::Digits { tent: b, .. }) => a == b,
            (Coords::Component { inner: a, .. }, Coords::Component { inner: b, .. }) => a.same_space(b),
            _ => false,
        }
    }

    #[inline]
    fn distance(&self, i: usize, other: &Coords, j: usize) -> f64 {
        match (self, other) {
            (Coords::Shift(a), Coords::Shift(b)) => first_difference_distance(&a[i..], &b[j..]),
            (Coords::Circle(a), Coords::Circle(b)) => circle_distance(a[i], b[j]),
            (Coords::Interval(a), Coords::Interval(b)) => (a[i] - b[j]).abs(),
            (Coords::Digits { tent, values: a, .. }, Coords::Digits { values: b, .. }) => {
                if *tent {
                    (a[i] - b[j]).abs()
                } else {
                    circle_distance(a[i], b[j])
                }
            }
            (Coords::Component { index: p, inner: a }, Coords::Component { index: q, inner: b }) => {
                if p == q {
                    a.distance(i, b, j)
                } else {
                    1.0
                }
            }
            _ => unreachable!("orbit segments checked for a common space"),
        }
    }

    fn point(&self, i: usize) -> Point {
        match self {
            Coords::Shift(s) => {
                let mut t = s[i..].to_vec();
                t.resize(s.len(), 0);
                Point::Symbols(t)
            }
            Coords::Circle(v) | Coords::Interval(v) => Point::Real(v[i]),
            Coords::Digits { digits, tent, .. } => {
                let flip = if *tent && i > 0 { digits[i - 1] } else { 0 };
                let mut t: Vec<u8> = digits[i..].iter().map(|b| b ^ flip).collect();
                t.resize(digits.len(), 0);
                Point::Digits(t)
            }
            Coords::Component { index, inner } => Point::Component { index: *index, inner: Box::new(inner.point(i)) },
        }
    }

    fn cell(&self, i: usize, partition: &Partition) -> Result<u32> {
        match (self, partition.kind) {
            (Coords::Shift(s), PartitionKind::ZeroCoordinate) => Ok(s[i] as u32),
            (Coords::Circle(v) | Coords::Interval(v) | Coords::Digits { values: v, .. }, PartitionKind::Bins) => {
                let cells = partition.cells;
                Ok(((v[i] * cells as f64).floor() as usize).min(cells - 1) as u32)
            }
            _ => Err(domain("partition is not compatible with this system")),
        }
    }
}

/// Length-`n` forward orbit of a point.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitSegment {
    base: Point,
    len: usize,
    coords: Coords,
}

impl OrbitSegment {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    /// `T^i x` as a standalone point.
    pub fn point(&self, i: usize) -> Point {
        assert!(i < self.len, "orbit index {i} out of range for length {}", self.len);
        self.coords.point(i)
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len).map(|i| self.coords.point(i))
    }

    /// Coordinates of the orbit points, for real-valued systems.
    pub fn coordinates(&self) -> Option<&[f64]> {
        match &self.coords {
            Coords::Circle(v) | Coords::Interval(v) | Coords::Digits { values: v, .. } => Some(v),
            _ => None,
        }
    }

    /// Whether both segments live in the same kind of space.
    pub fn same_space(&self, other: &OrbitSegment) -> bool {
        self.coords.same_space(&other.coords)
    }

    /// `d(T^i x, T^j y)`. Both segments must come from the same system.
    #[inline]
    pub fn distance(&self, i: usize, other: &OrbitSegment, j: usize) -> f64 {
        debug_assert!(i < self.len && j < other.len);
        self.coords.distance(i, &other.coords, j)
    }

    pub fn itinerary(&self, partition: &Partition) -> Result<Word> {
        (0..self.len).map(|i| self.coords.cell(i, partition)).collect::<Result<Vec<_>>>().map(Word)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionKind {
    /// Cylinders fixed by the 0-th symbol of a shift point.
    ZeroCoordinate,
    /// Equal-width left-closed bins of `[0,1)`.
    Bins,
}

/// Finite partition of the phase space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub kind: PartitionKind,
    pub cells: usize,
}

impl Partition {
    pub fn zero_coordinate(system: &System) -> Result<Partition> {
        let k = system.alphabet().ok_or_else(|| domain("zero-coordinate partitions need a shift system"))?;
        Ok(Partition { kind: PartitionKind::ZeroCoordinate, cells: k as usize })
    }

    pub fn bins(count: usize) -> Result<Partition> {
        if count < 2 {
            return Err(config(format!("a partition needs at least 2 cells, got {count}")));
        }
        Ok(Partition { kind: PartitionKind::Bins, cells: count })
    }
}

/// Sequence of partition cells visited along an orbit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Word(pub Vec<u32>);

impl Word {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(spec: SystemSpec) -> System {
        System::new(spec).unwrap()
    }

    fn coords(o: &OrbitSegment) -> Vec<f64> {
        o.coordinates().unwrap().to_vec()
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(System::new(SystemSpec::FullShift { k: 1, horizon: None }), Err(Error::Config(_))));
        assert!(matches!(System::new(SystemSpec::Rotation { alpha: 1.0 }), Err(Error::Config(_))));
        assert!(matches!(System::new(SystemSpec::Rotation { alpha: -0.1 }), Err(Error::Config(_))));
        assert!(matches!(System::new(SystemSpec::FullShift { k: 2, horizon: Some(1) }), Err(Error::Config(_))));
    }

    #[test]
    fn identity_rotation_and_shift_diameters() {
        let r = sys(SystemSpec::Rotation { alpha: 0.0 });
        assert_eq!(r.diameter(), 0.5);
        let x = Point::Real(0.3);
        assert_eq!(r.apply(&x).unwrap(), x);
        assert_eq!(sys(SystemSpec::FullShift { k: 2, horizon: Some(64) }).diameter(), 1.0);
        let d = sys(SystemSpec::Doubling { horizon: None });
        assert_eq!(d.metric(), MetricDescriptor::Circle);
        assert_eq!(d.apply(&Point::Real(0.75)).unwrap().coordinate(), Some(0.5));
    }

    #[test]
    fn orbit_examples() {
        let d = sys(SystemSpec::Doubling { horizon: None });
        assert_eq!(coords(&d.orbit(&Point::Real(0.0), 4).unwrap()), vec![0.0; 4]);
        assert_eq!(coords(&d.orbit(&Point::Real(0.5), 3).unwrap()), vec![0.5, 0.0, 0.0]);
        let r = sys(SystemSpec::Rotation { alpha: 0.5 });
        assert_eq!(coords(&r.orbit(&Point::Real(0.0), 4).unwrap()), vec![0.0, 0.5, 0.0, 0.5]);
        assert!(matches!(r.orbit(&Point::Real(0.0), 0), Err(Error::Domain(_))));
        let s = sys(SystemSpec::FullShift { k: 2, horizon: Some(8) });
        let x = s.symbol_point(&[1, 0]).unwrap();
        assert!(matches!(s.orbit(&x, 9), Err(Error::Horizon { n: 9, horizon: 8 })));
        let o = s.orbit(&x, 8).unwrap();
        assert_eq!(o.point(1), Point::Symbols(vec![0; 8]));
    }

    #[test]
    fn tent_digits_track_the_real_map() {
        let t = sys(SystemSpec::Tent { horizon: None });
        let o = t.orbit(&Point::Real(0.3), 20).unwrap();
        let mut x = 0.3f64;
        for (i, v) in coords(&o).into_iter().enumerate() {
            // floating tent loses one bit per step; stay well inside that budget
            assert!((v - x).abs() < 1e-9 * 2f64.powi(i as i32), "step {i}: {v} vs {x}");
            x = 1.0 - (2.0 * x - 1.0).abs();
        }
    }

    #[test]
    fn orbit_points_match_repeated_map_application() {
        let specs = [
            SystemSpec::FullShift { k: 3, horizon: Some(40) },
            SystemSpec::Rotation { alpha: 0.618_033_988_7 },
            SystemSpec::Doubling { horizon: Some(100) },
            SystemSpec::Tent { horizon: Some(100) },
            SystemSpec::Logistic,
        ];
        for spec in specs {
            let s = sys(spec.clone());
            let measure = if spec == SystemSpec::Logistic { MeasureSpec::Arcsine } else { MeasureSpec::Lebesgue };
            let mu = s.sample_points(&measure, 5, 11).unwrap();
            for p in &mu.points {
                let o = s.orbit(p, 30).unwrap();
                let mut q = p.clone();
                for i in 0..30 {
                    let stored = o.point(i);
                    match (&stored, &q) {
                        (Point::Real(a), Point::Real(b)) => assert!((a - b).abs() <= 1e-9),
                        // digits past the horizon are unspecified; compare coordinates
                        (Point::Digits(_), Point::Digits(_)) => {
                            assert!((stored.coordinate().unwrap() - q.coordinate().unwrap()).abs() <= 1e-9)
                        }
                        _ => assert_eq!(stored, q, "{spec:?} step {i}"),
                    }
                    q = s.apply(&q).unwrap();
                }
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_and_validated() {
        let s = sys(SystemSpec::FullShift { k: 2, horizon: Some(16) });
        let half = MeasureSpec::Bernoulli { probs: vec![0.5, 0.5] };
        let a = s.sample_points(&half, 4, 7).unwrap();
        assert_eq!(a, s.sample_points(&half, 4, 7).unwrap());
        assert_eq!(a.len(), 4);
        assert!((a.weight() * 4.0 - 1.0).abs() < 1e-15);

        let s3 = sys(SystemSpec::FullShift { k: 3, horizon: Some(16) });
        assert!(s3.sample_points(&MeasureSpec::Bernoulli { probs: vec![0.7, 0.2, 0.1] }, 3, 1).is_ok());
        assert!(matches!(
            s3.sample_points(&MeasureSpec::Bernoulli { probs: vec![0.7, 0.2, 0.2] }, 3, 1),
            Err(Error::Config(_))
        ));
        assert!(s.sample_points(&half, 0, 1).is_err());
        assert!(sys(SystemSpec::Logistic).sample_points(&MeasureSpec::Lebesgue, 3, 1).is_err());
    }

    #[test]
    fn lebesgue_sample_mean() {
        // mean of M uniforms has sd 1/sqrt(12 M) ≈ 0.0091; [0.45, 0.55] is beyond 5 sd
        let d = sys(SystemSpec::Doubling { horizon: None });
        let mu = d.sample_points(&MeasureSpec::Lebesgue, 1000, 3).unwrap();
        let mean = mu.points.iter().map(|p| p.coordinate().unwrap()).sum::<f64>() / 1000.0;
        assert!((0.45..=0.55).contains(&mean), "{mean}");
    }

    #[test]
    fn itinerary_examples() {
        let s = sys(SystemSpec::FullShift { k: 2, horizon: Some(16) });
        let x = s.symbol_point(&[0, 1, 1, 0]).unwrap();
        let zero = Partition::zero_coordinate(&s).unwrap();
        assert_eq!(s.itinerary(&zero, &x, 4).unwrap(), Word(vec![0, 1, 1, 0]));

        let d = sys(SystemSpec::Doubling { horizon: None });
        let w = d.itinerary(&Partition::bins(2).unwrap(), &Point::Real(0.25), 3).unwrap();
        assert_eq!(w, Word(vec![0, 1, 0]));

        let id = sys(SystemSpec::Rotation { alpha: 0.0 });
        let w = id.itinerary(&Partition::bins(4).unwrap(), &Point::Real(0.8), 5).unwrap();
        assert_eq!(w, Word(vec![3; 5]));
        // boundary goes to the left-closed cell
        let w = id.itinerary(&Partition::bins(4).unwrap(), &Point::Real(0.5), 1).unwrap();
        assert_eq!(w, Word(vec![2]));

        assert!(matches!(s.itinerary(&Partition::bins(2).unwrap(), &x, 3), Err(Error::Domain(_))));
        assert!(Partition::zero_coordinate(&d).is_err());
        assert!(Partition::bins(1).is_err());
    }

    #[test]
    fn distance_examples() {
        let r = sys(SystemSpec::Rotation { alpha: 0.1 });
        let d = r.distance(&Point::Real(0.1), &Point::Real(0.9)).unwrap();
        assert!((d - 0.2).abs() < 1e-15);
        let s = sys(SystemSpec::FullShift { k: 2, horizon: Some(8) });
        let a = s.symbol_point(&[0, 0, 0]).unwrap();
        let b = s.symbol_point(&[0, 0, 1]).unwrap();
        assert_eq!(s.distance(&a, &b).unwrap(), 0.25);
        assert_eq!(s.distance(&a, &a).unwrap(), 0.0);
        assert!(matches!(s.distance(&a, &Point::Real(0.1)), Err(Error::Domain(_))));
    }

    #[test]
    fn two_component_distance_is_one_across_parts() {
        let spec = SystemSpec::TwoComponent {
            a: Box::new(SystemSpec::Rotation { alpha: 0.0 }),
            b: Box::new(SystemSpec::Rotation { alpha: 0.0 }),
            weight_a: 0.5,
        };
        let s = sys(spec);
        let p = Point::Component { index: 0, inner: Box::new(Point::Real(0.2)) };
        let q = Point::Component { index: 1, inner: Box::new(Point::Real(0.2)) };
        let r = Point::Component { index: 0, inner: Box::new(Point::Real(0.3)) };
        assert_eq!(s.distance(&p, &q).unwrap(), 1.0);
        assert!((s.distance(&p, &r).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(s.diameter(), 1.0);
    }

    #[test]
    fn spec_json_forms() {
        let cases = [
            (r#"{"kind": "full_shift", "k": 2, "horizon": 96}"#, SystemSpec::FullShift { k: 2, horizon: Some(96) }),
            (r#"{"kind": "rotation", "alpha": 0.6180339887}"#, SystemSpec::Rotation { alpha: 0.6180339887 }),
            (r#"{"kind": "doubling"}"#, SystemSpec::Doubling { horizon: None }),
            (r#"{"kind": "tent"}"#, SystemSpec::Tent { horizon: None }),
            (r#"{"kind": "logistic"}"#, SystemSpec::Logistic),
        ];
        for (text, expected) in cases {
            let parsed: SystemSpec = serde_json::from_str(text).unwrap();
            assert_eq!(parsed, expected);
            let again: SystemSpec = serde_json::from_str(&serde_json::to_string(&parsed).unwrap()).unwrap();
            assert_eq!(again, expected);
        }
        let two: SystemSpec = serde_json::from_str(
            r#"{"kind": "two_component", "a": {"kind": "rotation", "alpha": 0.0}, "b": {"kind": "doubling"}, "weight_a": 0.25}"#,
        )
        .unwrap();
        assert!(matches!(two, SystemSpec::TwoComponent { weight_a, .. } if weight_a == 0.25));
    }
}
