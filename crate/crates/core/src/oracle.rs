//! Brute-force reference implementations, straight from the definitions.
//!
//! Everything here enumerates all candidate matchings or permutations, so it
//! is only usable for very short orbits (`n ≤ 8`). The fast kernels in
//! [`crate::matching`] are tested against these.

use crate::matching::PairCosts;
use crate::systems::Word;

/// Receives each enumerated matching as `(i, j)` pairs.
type Visitor<'a> = &'a mut dyn FnMut(&[(usize, usize)]);
/// An enumeration over matchings of `0..n`.
type Enumeration = fn(usize, Visitor);

/// Calls `visit` with every order-preserving partial matching, as a list of
/// `(i, j)` pairs with both coordinates strictly increasing.
pub fn for_each_ordered_matching(n: usize, mut visit: impl FnMut(&[(usize, usize)])) {
    assert!(n <= 12, "exhaustive enumeration is limited to short orbits");
    let subsets = 1u32 << n;
    for rows in 0..subsets {
        let r: Vec<usize> = (0..n).filter(|i| rows >> i & 1 == 1).collect();
        for cols in 0..subsets {
            if cols.count_ones() as usize != r.len() {
                continue;
            }
            let c = (0..n).filter(|j| cols >> j & 1 == 1);
            let pairs: Vec<(usize, usize)> = r.iter().copied().zip(c).collect();
            visit(&pairs);
        }
    }
}

/// Calls `visit` with every partial bijection between `0..n` and `0..n`.
pub fn for_each_partial_bijection(n: usize, mut visit: impl FnMut(&[(usize, usize)])) {
    fn go(i: usize, n: usize, used: &mut Vec<bool>, acc: &mut Vec<(usize, usize)>, visit: Visitor) {
        if i == n {
            visit(acc);
            return;
        }
        go(i + 1, n, used, acc, visit);
        for j in 0..n {
            if !used[j] {
                used[j] = true;
                acc.push((i, j));
                go(i + 1, n, used, acc, visit);
                acc.pop();
                used[j] = false;
            }
        }
    }
    assert!(n <= 8, "exhaustive enumeration is limited to short orbits");
    go(0, n, &mut vec![false; n], &mut Vec::new(), &mut visit);
}

/// Calls `visit` with every permutation of `0..n`.
pub fn for_each_permutation(n: usize, mut visit: impl FnMut(&[usize])) {
    fn go(k: usize, perm: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        if k == perm.len() {
            visit(perm);
            return;
        }
        for i in k..perm.len() {
            perm.swap(k, i);
            go(k + 1, perm, visit);
            perm.swap(k, i);
        }
    }
    assert!(n <= 9, "exhaustive enumeration is limited to short orbits");
    go(0, &mut (0..n).collect(), &mut visit);
}

fn best_size(costs: &PairCosts, delta: f64, each: Enumeration) -> usize {
    let mut best = 0;
    each(costs.n(), &mut |m| {
        if m.len() > best && m.iter().all(|&(i, j)| costs.get(i, j) < delta) {
            best = m.len();
        }
    });
    best
}

/// Largest order-preserving matching using only pairs with cost `< delta`.
pub fn ordered_match_size(costs: &PairCosts, delta: f64) -> usize {
    best_size(costs, delta, |n, v| for_each_ordered_matching(n, v))
}

/// Largest partial bijection using only pairs with cost `< delta`.
pub fn unordered_match_size(costs: &PairCosts, delta: f64) -> usize {
    best_size(costs, delta, |n, v| for_each_partial_bijection(n, v))
}

/// Smallest over matchings of `max(largest matched cost, unmatched fraction)`;
/// the empty matching contributes 1.
///
/// A matching `π` witnesses `f̄_{n,δ} < δ` exactly when `δ` exceeds both its
/// largest cost and its unmatched fraction, so this minimum is the infimum
/// of such `δ`.
fn minimax(costs: &PairCosts, each: Enumeration) -> f64 {
    let n = costs.n();
    let mut best = 1.0_f64;
    each(n, &mut |m| {
        let worst = m.iter().map(|&(i, j)| costs.get(i, j)).fold(0.0, f64::max);
        let unmatched = (n - m.len()) as f64 / n as f64;
        best = best.min(worst.max(unmatched));
    });
    best
}

/// `d_FKn` by enumeration of all order-preserving matchings.
pub fn fk_distance(costs: &PairCosts) -> f64 {
    minimax(costs, |n, v| for_each_ordered_matching(n, v))
}

/// Order-free `d̃_FKn` by enumeration of all partial bijections.
pub fn fk_unordered_distance(costs: &PairCosts) -> f64 {
    minimax(costs, |n, v| for_each_partial_bijection(n, v))
}

/// `F_n`: minimal average cost over all permutations.
pub fn weak_mean(costs: &PairCosts) -> f64 {
    let n = costs.n();
    let mut best = f64::INFINITY;
    for_each_permutation(n, |p| {
        let total: f64 = p.iter().enumerate().map(|(i, &j)| costs.get(i, j)).sum();
        best = best.min(total);
    });
    best / n as f64
}

/// Longest common subsequence by checking every subsequence of `a`.
pub fn lcs(a: &[u32], b: &[u32]) -> usize {
    assert!(a.len() <= 16, "exhaustive enumeration is limited to short words");
    let is_subsequence = |s: &[u32]| {
        let mut it = b.iter();
        s.iter().all(|x| it.any(|y| y == x))
    };
    (0u32..1 << a.len())
        .filter_map(|mask| {
            let s: Vec<u32> = (0..a.len()).filter(|i| mask >> i & 1 == 1).map(|i| a[i]).collect();
            is_subsequence(&s).then_some(s.len())
        })
        .max()
        .unwrap_or(0)
}

/// `1 - LCS/n` by enumeration.
pub fn word_edit_distance(w: &Word, w2: &Word) -> f64 {
    assert_eq!(w.0.len(), w2.0.len());
    1.0 - lcs(&w.0, &w2.0) as f64 / w.0.len() as f64
}
