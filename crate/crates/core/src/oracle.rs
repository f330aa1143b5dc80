//! Brute-force references for small systems.
//!
//! Nothing here goes through the characteristic function or the permanent
//! engine. The Fock oracle expands the output state over (spatial mode,
//! internal basis state) pairs directly.

use std::collections::BTreeMap;

use nalgebra::DVector;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;

use crate::error::{Error, Result};
use crate::linalg::{UnitaryMatrix, C64};
use crate::partitions::{BinnedDistribution, Partition};
use crate::seed::stream_rng;

/// Largest photon number the Fock oracle accepts.
pub const FOCK_MAX_N: usize = 3;
/// Largest photon number for the per-outcome permanent formulas.
pub const OUTCOME_MAX_N: usize = 8;

const NULL_DIRECTION: f64 = 1e-12;

/// Orthonormal basis of the span of `states` (modified Gram-Schmidt) and the
/// coordinates of every state in it.
fn internal_coordinates(states: &[DVector<C64>]) -> Vec<Vec<C64>> {
    let mut basis: Vec<DVector<C64>> = Vec::new();
    for s in states {
        let mut r = s.clone();
        for b in &basis {
            let c = b.dotc(&r);
            r -= b * c;
        }
        let norm = r.norm();
        if norm > NULL_DIRECTION {
            basis.push(r / C64::new(norm, 0.0));
        }
    }
    states.iter().map(|s| basis.iter().map(|b| b.dotc(s)).collect()).collect()
}

/// `prod_j (sum_e row_j[e] c_e^dagger) |0>` as coefficients of sorted
/// multisets of extended modes `e`.
fn expand(rows: &[Vec<C64>]) -> BTreeMap<Vec<usize>, C64> {
    let mut terms: BTreeMap<Vec<usize>, C64> = BTreeMap::new();
    terms.insert(Vec::new(), C64::new(1.0, 0.0));
    for row in rows {
        let mut next: BTreeMap<Vec<usize>, C64> = BTreeMap::new();
        for (ms, amp) in &terms {
            for (e, &c) in row.iter().enumerate() {
                if c == C64::new(0.0, 0.0) {
                    continue;
                }
                let mut key = ms.clone();
                let pos = key.partition_point(|&v| v <= e);
                key.insert(pos, e);
                *next.entry(key).or_insert(C64::new(0.0, 0.0)) += amp * c;
            }
        }
        terms = next;
    }
    terms
}

/// `prod occ!` for a sorted multiset.
fn multiplicity(ms: &[usize]) -> f64 {
    let mut out = 1.0;
    let mut run = 1;
    for i in 1..=ms.len() {
        if i < ms.len() && ms[i] == ms[i - 1] {
            run += 1;
            out *= run as f64;
        } else {
            run = 1;
        }
    }
    out
}

/// Bin-count distribution for photons in input modes `1..=n` with the given
/// internal states.
pub fn fock_binned_distribution(
    u: &UnitaryMatrix,
    states: &[DVector<C64>],
    partition: &Partition,
) -> Result<BinnedDistribution> {
    let modes: Vec<usize> = (0..states.len()).collect();
    fock_binned_distribution_from(u, &modes, states, partition)
}

/// Same, photon `j` entering input mode `input_modes[j]` (0-based).
pub fn fock_binned_distribution_from(
    u: &UnitaryMatrix,
    input_modes: &[usize],
    states: &[DVector<C64>],
    partition: &Partition,
) -> Result<BinnedDistribution> {
    let n = states.len();
    let m = u.dim();
    if n == 0 || n != input_modes.len() {
        return Err(Error::Shape("need one input mode per internal state".into()));
    }
    if n > FOCK_MAX_N {
        return Err(Error::TooLarge(format!("Fock oracle limited to n <= {FOCK_MAX_N}")));
    }
    if input_modes.iter().any(|&d| d >= m) {
        return Err(Error::Shape(format!("input mode outside 0..{m}")));
    }
    if partition.total_modes() != m {
        return Err(Error::Shape("partition and interferometer sizes differ".into()));
    }
    let coords = internal_coordinates(states);
    let r = coords[0].len();
    if r == 0 {
        return Err(Error::InvalidGram("internal states are all zero".into()));
    }
    // extended mode e = spatial * r + internal
    let input_rows: Vec<Vec<C64>> = (0..n)
        .map(|j| {
            let mut row = vec![C64::new(0.0, 0.0); m * r];
            for a in 0..r {
                row[input_modes[j] * r + a] = coords[j][a];
            }
            row
        })
        .collect();
    let um = u.matrix();
    let output_rows: Vec<Vec<C64>> = (0..n)
        .map(|j| {
            let mut row = vec![C64::new(0.0, 0.0); m * r];
            for k in 0..m {
                for a in 0..r {
                    row[k * r + a] = um[(input_modes[j], k)] * coords[j][a];
                }
            }
            row
        })
        .collect();
    let norm: f64 = expand(&input_rows).iter().map(|(ms, c)| c.norm_sqr() * multiplicity(ms)).sum();
    let owner = partition.bin_of_mode();
    let mut dist = BinnedDistribution::zeros(n, vec![n + 1; partition.num_bins()])?;
    for (ms, c) in expand(&output_rows) {
        let mut k = vec![0; partition.num_bins()];
        for &e in &ms {
            if let Some(z) = owner[e / r] {
                k[z] += 1;
            }
        }
        let i = dist.index_of(&k).expect("counts bounded by n");
        dist.probabilities_mut()[i] += c.norm_sqr() * multiplicity(&ms) / norm;
    }
    Ok(dist)
}

fn naive_permanent(a: &[Vec<C64>]) -> C64 {
    fn rec(a: &[Vec<C64>], row: usize, used: &mut [bool]) -> C64 {
        if row == a.len() {
            return C64::new(1.0, 0.0);
        }
        let mut acc = C64::new(0.0, 0.0);
        for col in 0..a.len() {
            if !used[col] {
                used[col] = true;
                acc += a[row][col] * rec(a, row + 1, used);
                used[col] = false;
            }
        }
        acc
    }
    rec(a, 0, &mut vec![false; a.len()])
}

/// Rows `1..=n` of `u`, columns repeated according to `s`.
fn outcome_submatrix(u: &UnitaryMatrix, s: &[usize]) -> Result<Vec<Vec<C64>>> {
    if s.len() != u.dim() {
        return Err(Error::Shape(format!("outcome has {} modes, interferometer {}", s.len(), u.dim())));
    }
    let n: usize = s.iter().sum();
    if n == 0 || n > u.dim() {
        return Err(Error::Shape(format!("outcome holds {n} photons")));
    }
    if n > OUTCOME_MAX_N {
        return Err(Error::TooLarge(format!("outcome formulas limited to n <= {OUTCOME_MAX_N}")));
    }
    let cols: Vec<usize> = s.iter().enumerate().flat_map(|(k, &c)| std::iter::repeat_n(k, c)).collect();
    Ok((0..n).map(|j| cols.iter().map(|&k| u.get(j, k)).collect()).collect())
}

fn factorials(s: &[usize]) -> f64 {
    s.iter().map(|&c| (1..=c).map(|v| v as f64).product::<f64>()).product()
}

/// Probability of output occupation `s` for indistinguishable photons in
/// inputs `1..=n`, `n = sum s`.
pub fn ideal_outcome_probability(u: &UnitaryMatrix, s: &[usize]) -> Result<f64> {
    let a = outcome_submatrix(u, s)?;
    Ok(naive_permanent(&a).norm_sqr() / factorials(s))
}

/// Same for fully distinguishable photons.
pub fn distinguishable_outcome_probability(u: &UnitaryMatrix, s: &[usize]) -> Result<f64> {
    let a: Vec<Vec<C64>> = outcome_submatrix(u, s)?
        .into_iter()
        .map(|row| row.into_iter().map(|z| C64::new(z.norm_sqr(), 0.0)).collect())
        .collect();
    Ok(naive_permanent(&a).re / factorials(s))
}

/// Every occupation vector of `n` photons in `m` modes.
pub fn occupation_patterns(m: usize, n: usize) -> Vec<Vec<usize>> {
    fn rec(m: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == m - 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for c in (0..=left).rev() {
            cur.push(c);
            rec(m, left - c, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if m > 0 {
        rec(m, n, &mut Vec::with_capacity(m), &mut out);
    }
    out
}

/// Bin an outcome-probability rule over all occupation patterns.
pub fn binned_from_outcomes(
    u: &UnitaryMatrix,
    n: usize,
    partition: &Partition,
    rule: fn(&UnitaryMatrix, &[usize]) -> Result<f64>,
) -> Result<BinnedDistribution> {
    let owner = partition.bin_of_mode();
    let mut dist = BinnedDistribution::zeros(n, vec![n + 1; partition.num_bins()])?;
    for s in occupation_patterns(u.dim(), n) {
        let mut k = vec![0; partition.num_bins()];
        for (mode, &c) in s.iter().enumerate() {
            if let Some(z) = owner[mode] {
                k[z] += c;
            }
        }
        let i = dist.index_of(&k).expect("counts bounded by n");
        dist.probabilities_mut()[i] += rule(u, &s)?;
    }
    Ok(dist)
}

/// `count` independent draws of count vectors `k`.
pub fn sample_binned(dist: &BinnedDistribution, count: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let weights: Vec<f64> = dist.probabilities().iter().map(|&p| p.max(0.0)).collect();
    let index =
        WeightedIndex::new(&weights).map_err(|e| Error::Domain(format!("cannot sample from distribution: {e}")))?;
    let mut rng = stream_rng(seed, 0);
    Ok((0..count).map(|_| dist.counts_of(index.sample(&mut rng))).collect())
}
