//! Empirical checks for Katok's word criterion and weak-mean ergodicity.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::domain;
use crate::matching::{words_within, PairCosts};
use crate::rng;
use crate::systems::{EmpiricalMeasure, Partition, System, Word};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub partition: Partition,
    pub n: usize,
    pub eps: f64,
    /// Best candidate word found, reported whether or not it passes.
    pub witness: Option<Word>,
    /// Fraction of sampled words within edit distance `< eps` of the witness.
    pub achieved_fraction: f64,
    pub pass: bool,
}

/// Looks for a word `w` of length `n` such that the words `w'` with
/// `f̄_n(w, w') < ε` carry empirical mass at least `1 - ε`.
///
/// Candidates are `candidate_count` distinct itineraries drawn from the
/// measure with `seed`; every itinerary of the measure is scored against
/// each candidate.
pub fn katok_criterion_check(
    system: &System,
    partition: &Partition,
    measure: &EmpiricalMeasure,
    n: usize,
    eps: f64,
    candidate_count: usize,
    seed: u64,
) -> Result<CriterionReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(domain(format!("criterion radius must lie in (0,1), got {eps}")));
    }
    let m = measure.len();
    if candidate_count == 0 || candidate_count > m {
        return Err(domain(format!("candidate count must lie in 1..={m}, got {candidate_count}")));
    }
    let words: Vec<Word> =
        measure.points.par_iter().map(|p| system.itinerary(partition, p, n)).collect::<Result<_>>()?;
    let mut rng = rng::seeded(seed);
    let mut candidates = rand::seq::index::sample(&mut rng, m, candidate_count).into_vec();
    candidates.sort_unstable();

    let scores: Vec<usize> = candidates
        .par_iter()
        .map(|&c| {
            let mut hits = 0;
            for w in &words {
                if words_within(&words[c], w, eps)? {
                    hits += 1;
                }
            }
            Ok(hits)
        })
        .collect::<Result<_>>()?;
    // first maximum in candidate order
    let (best, hits) = scores.iter().enumerate().fold((0, 0), |acc, (k, &h)| if h > acc.1 { (k, h) } else { acc });
    let achieved_fraction = hits as f64 / m as f64;
    let pass = achieved_fraction >= 1.0 - eps;
    Ok(CriterionReport {
        partition: *partition,
        n,
        eps,
        witness: Some(words[candidates[best]].clone()),
        achieved_fraction,
        pass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeVerdict {
    ConsistentWithErgodic,
    Inconsistent,
}

impl ProbeVerdict {
    pub fn name(self) -> &'static str {
        match self {
            ProbeVerdict::ConsistentWithErgodic => "consistent-with-ergodic",
            ProbeVerdict::Inconsistent => "inconsistent",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub n: usize,
    pub pair_count: usize,
    pub q05: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub q95: f64,
    pub threshold: f64,
    pub verdict: ProbeVerdict,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Distribution of `F_n` over explicit index pairs of the measure.
pub fn probe_pairs(
    system: &System,
    measure: &EmpiricalMeasure,
    n: usize,
    pairs: &[(usize, usize)],
    threshold: f64,
) -> Result<ProbeReport> {
    if pairs.is_empty() {
        return Err(domain("pair count must be positive"));
    }
    let m = measure.len();
    if pairs.iter().any(|&(i, j)| i >= m || j >= m) {
        return Err(domain("pair index outside the measure"));
    }
    let mut values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let ox = system.orbit(&measure.points[i], n)?;
            let oy = system.orbit(&measure.points[j], n)?;
            Ok(PairCosts::new(&ox, &oy)?.weak_mean())
        })
        .collect::<Result<_>>()?;
    values.sort_by(f64::total_cmp);
    let median = quantile(&values, 0.5);
    Ok(ProbeReport {
        n,
        pair_count: pairs.len(),
        q05: quantile(&values, 0.05),
        q25: quantile(&values, 0.25),
        median,
        q75: quantile(&values, 0.75),
        q95: quantile(&values, 0.95),
        threshold,
        verdict: if median < threshold { ProbeVerdict::ConsistentWithErgodic } else { ProbeVerdict::Inconsistent },
    })
}

/// Samples `pair_count` independent pairs from `μ̂ × μ̂` and summarizes `F_n`.
/// The verdict threshold defaults to `0.05 · diameter`.
pub fn ergodicity_probe(
    system: &System,
    measure: &EmpiricalMeasure,
    n: usize,
    pair_count: usize,
    seed: u64,
    threshold: Option<f64>,
) -> Result<ProbeReport> {
    if pair_count == 0 {
        return Err(domain("pair count must be positive"));
    }
    let m = measure.len();
    let mut rng = rng::seeded(seed);
    let pairs: Vec<(usize, usize)> = (0..pair_count).map(|_| (rng.gen_range(0..m), rng.gen_range(0..m))).collect();
    probe_pairs(system, measure, n, &pairs, threshold.unwrap_or(0.05 * system.diameter()))
}
