//! Matrix permanents: definition-level enumeration, Ryser's exact formula
//! with Gray-code ordering, and the randomized Glynn/Gurvits estimator.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};
use crate::seed::stream_rng;

/// Largest size accepted by [`perm_naive`].
pub const NAIVE_MAX: usize = 10;

/// Above this size Ryser's outer sum is accumulated with compensation.
const COMPENSATED_ABOVE: usize = 20;

/// Trials per parallel block of the Glynn estimator.
const GLYNN_BLOCK: u64 = 4096;

fn check_square(a: &ComplexMatrix) -> Result<usize> {
    if !a.is_square() {
        return Err(Error::Shape(format!("permanent needs a square matrix, got {}x{}", a.nrows(), a.ncols())));
    }
    Ok(a.nrows())
}

/// Sum over all permutations of `prod_i A[i, sigma(i)]`.
pub fn perm_naive(a: &ComplexMatrix) -> Result<C64> {
    let n = check_square(a)?;
    if n > NAIVE_MAX {
        return Err(Error::TooLarge(format!("perm_naive limited to n <= {NAIVE_MAX}, got {n}")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut total = C64::new(0.0, 0.0);
    permute(a, &mut perm, 0, &mut total);
    Ok(total)
}

fn permute(a: &ComplexMatrix, perm: &mut [usize], depth: usize, total: &mut C64) {
    let n = perm.len();
    if depth == n {
        let mut prod = C64::new(1.0, 0.0);
        for (row, &col) in perm.iter().enumerate() {
            prod *= a[(row, col)];
        }
        *total += prod;
        return;
    }
    for i in depth..n {
        perm.swap(depth, i);
        permute(a, perm, depth + 1, total);
        perm.swap(depth, i);
    }
}

#[derive(Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Exact permanent by Ryser's inclusion-exclusion formula, visiting column
/// subsets in Gray-code order so each step updates the row sums in O(n).
pub fn perm_ryser(a: &ComplexMatrix) -> Result<C64> {
    let n = check_square(a)?;
    if n == 0 {
        return Ok(C64::new(1.0, 0.0));
    }
    if n >= 63 {
        return Err(Error::TooLarge(format!("perm_ryser cannot enumerate 2^{n} subsets")));
    }
    let compensated = n > COMPENSATED_ABOVE;
    let mut row_sums = vec![C64::new(0.0, 0.0); n];
    let mut plain = C64::new(0.0, 0.0);
    let (mut acc_re, mut acc_im) = (Neumaier::default(), Neumaier::default());
    let mut gray: u64 = 0;

    for step in 1u64..(1u64 << n) {
        let col = step.trailing_zeros() as usize;
        let bit = 1u64 << col;
        gray ^= bit;
        let column = a.column(col);
        if gray & bit != 0 {
            for (s, v) in row_sums.iter_mut().zip(column.iter()) {
                *s += v;
            }
        } else {
            for (s, v) in row_sums.iter_mut().zip(column.iter()) {
                *s -= v;
            }
        }
        let mut prod = row_sums[0];
        for s in &row_sums[1..] {
            prod *= s;
        }
        // (-1)^(n - |S|) folded in here
        if (n - gray.count_ones() as usize) % 2 == 1 {
            prod = -prod;
        }
        if compensated {
            acc_re.add(prod.re);
            acc_im.add(prod.im);
        } else {
            plain += prod;
        }
    }
    Ok(if compensated { C64::new(acc_re.value(), acc_im.value()) } else { plain })
}

/// Trial count `ceil(8 / epsilon^2)` for a target error `epsilon * ||A||^n`.
///
/// A single draw has modulus at most `||A||^n`, so the mean of `T` draws has
/// mean-square error at most `||A||^(2n) / T = (epsilon ||A||^n)^2 / 8`.
/// Chebyshev alone guarantees 87.5%; the bounded, near-Gaussian error of the
/// mean puts the actual failure rate far below 5%.
pub fn glynn_trials(epsilon: f64) -> u64 {
    (8.0 / (epsilon * epsilon)).ceil() as u64
}

/// Result of a randomized permanent estimate, with its run metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlynnEstimate {
    pub value: C64Pair,
    pub epsilon: f64,
    pub trials: u64,
    pub seed: u64,
}

/// Serializable complex number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct C64Pair {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for C64Pair {
    fn from(z: C64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<C64Pair> for C64 {
    fn from(z: C64Pair) -> Self {
        C64::new(z.re, z.im)
    }
}

/// One draw of the Glynn/Gurvits estimator: for uniform signs `x`,
/// `prod_i x_i * prod_j (sum_i x_i A[i, j])`. Its mean is `perm(A)`.
pub fn glynn_single_trial<R: Rng + ?Sized>(a: &ComplexMatrix, rng: &mut R) -> C64 {
    let n = a.nrows();
    let mut signs = vec![1.0f64; n];
    let mut bits = 0u64;
    let mut prefix_sign = 1.0;
    for (i, s) in signs.iter_mut().enumerate() {
        if i % 64 == 0 {
            bits = rng.next_u64();
        }
        if bits & 1 == 1 {
            *s = -1.0;
            prefix_sign = -prefix_sign;
        }
        bits >>= 1;
    }
    let mut prod = C64::new(prefix_sign, 0.0);
    for j in 0..n {
        let col = a.column(j);
        let mut y = C64::new(0.0, 0.0);
        for (v, s) in col.iter().zip(&signs) {
            y += v * *s;
        }
        prod *= y;
    }
    prod
}

/// Unbiased randomized estimate of `perm(A)` with `glynn_trials(epsilon)`
/// trials, deterministic in `seed`.
pub fn perm_glynn_estimate(a: &ComplexMatrix, epsilon: f64, seed: u64) -> Result<GlynnEstimate> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::Domain(format!("epsilon must be > 0, got {epsilon}")));
    }
    check_square(a)?;
    let trials = glynn_trials(epsilon);
    let value = glynn_mean(a, trials, seed);
    Ok(GlynnEstimate { value: value.into(), epsilon, trials, seed })
}

/// Mean of `trials` single draws. Blocks of trials use their own streams,
/// so the result does not depend on thread scheduling.
pub fn glynn_mean(a: &ComplexMatrix, trials: u64, seed: u64) -> C64 {
    if trials == 0 {
        return C64::new(0.0, 0.0);
    }
    let blocks = trials.div_ceil(GLYNN_BLOCK);
    let run_block = |b: u64| {
        let mut rng = stream_rng(seed, b);
        let count = GLYNN_BLOCK.min(trials - b * GLYNN_BLOCK);
        let mut sum = C64::new(0.0, 0.0);
        for _ in 0..count {
            sum += glynn_single_trial(a, &mut rng);
        }
        sum
    };
    let partials: Vec<C64> = if blocks > 4 {
        (0..blocks).into_par_iter().map(run_block).collect()
    } else {
        (0..blocks).map(run_block).collect()
    };
    partials.iter().sum::<C64>() / trials as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::haar_unitary;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, seed: u64) -> ComplexMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ComplexMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn close(a: C64, b: C64, rel: f64) -> bool {
        (a - b).norm() <= rel * b.norm().max(1e-300) || (a - b).norm() < 1e-14
    }

    #[test]
    fn naive_small_cases() {
        let a = ComplexMatrix::from_element(1, 1, C64::new(2.5, -1.0));
        assert_eq!(perm_naive(&a).unwrap(), C64::new(2.5, -1.0));
        let ones = ComplexMatrix::from_element(3, 3, C64::new(1.0, 0.0));
        assert!((perm_naive(&ones).unwrap() - C64::new(6.0, 0.0)).norm() < 1e-12);
        let id = ComplexMatrix::identity(4, 4);
        assert!((perm_naive(&id).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn naive_guards() {
        let rect = ComplexMatrix::zeros(2, 3);
        assert!(matches!(perm_naive(&rect), Err(Error::Shape(_))));
        assert!(matches!(perm_ryser(&rect), Err(Error::Shape(_))));
        let big = ComplexMatrix::identity(11, 11);
        assert!(matches!(perm_naive(&big), Err(Error::TooLarge(_))));
    }

    #[test]
    fn ryser_identity_and_swap() {
        for n in 1..=8 {
            let id = ComplexMatrix::identity(n, n);
            assert!((perm_ryser(&id).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-13);
        }
        let swap = ComplexMatrix::from_row_slice(
            2,
            2,
            &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        );
        assert!((perm_ryser(&swap).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn ryser_matches_naive_6x6() {
        let a = random_matrix(6, 99);
        assert!(close(perm_ryser(&a).unwrap(), perm_naive(&a).unwrap(), 1e-10));
    }

    #[test]
    fn ryser_compensated_path_agrees() {
        // block-diagonal matrices factor: perm(A (+) B) = perm(A) perm(B)
        let a = random_matrix(10, 5);
        let b = random_matrix(11, 6);
        let mut big = ComplexMatrix::zeros(21, 21);
        big.view_mut((0, 0), (10, 10)).copy_from(&a);
        big.view_mut((10, 10), (11, 11)).copy_from(&b);
        let p = perm_ryser(&big).unwrap();
        let q = perm_ryser(&a).unwrap() * perm_ryser(&b).unwrap();
        assert!((p - q).norm() / q.norm() < 1e-9, "{p} vs {q}");
    }

    #[test]
    fn glynn_zero_matrix_is_exactly_zero() {
        let z = ComplexMatrix::zeros(4, 4);
        for seed in 0..20 {
            let est = perm_glynn_estimate(&z, 0.5, seed).unwrap();
            assert_eq!(C64::from(est.value), C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn glynn_rejects_bad_epsilon() {
        let id = ComplexMatrix::identity(3, 3);
        assert!(matches!(perm_glynn_estimate(&id, 0.0, 1), Err(Error::Domain(_))));
        assert!(matches!(perm_glynn_estimate(&id, -1.0, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn glynn_identity_within_epsilon() {
        let id = ComplexMatrix::identity(6, 6);
        let eps = 0.05;
        let hits = (0..200u64)
            .filter(|&s| {
                let est = perm_glynn_estimate(&id, eps, s).unwrap();
                (C64::from(est.value) - C64::new(1.0, 0.0)).norm() <= eps
            })
            .count();
        assert!(hits >= 190, "only {hits}/200 within epsilon");
    }

    #[test]
    fn glynn_deterministic() {
        let u = haar_unitary(5, 3).unwrap();
        let a = u.matrix().view((0, 0), (4, 4)).into_owned();
        let x = perm_glynn_estimate(&a, 0.1, 17).unwrap();
        let y = perm_glynn_estimate(&a, 0.1, 17).unwrap();
        assert_eq!(x, y);
        assert_eq!(x.trials, 800);
    }
}
