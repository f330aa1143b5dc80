//! Closed-form binned distributions.
//!
//! Single-mode and odd-mode counts behind a Fourier interferometer, the
//! single-subset expansion in principal minors of `H`, and the Haar-averaged
//! bin distributions. Factorial-heavy sums are evaluated in exact rational
//! arithmetic and converted to `f64` at the end.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, UnitaryMatrix, C64};
use crate::noise::GramMatrix;
use crate::partitions::BinnedDistribution;
use crate::permanent::perm_ryser;

/// Largest `n` accepted by [`single_subset_expansion`].
pub const EXPANSION_MAX_N: usize = 10;

fn binom(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, v| acc * v)
}

fn ratio(num: BigInt, den: BigInt) -> BigRational {
    BigRational::new(num, den)
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn from_rationals(n: usize, probs: &[BigRational]) -> Result<BinnedDistribution> {
    BinnedDistribution::cube(n, 1, probs.iter().map(to_f64).collect())
}

fn check_fourier_sizes(n: usize, m: usize) -> Result<()> {
    if n == 0 || n > m {
        return Err(Error::Domain(format!("need 1 <= n <= m, got n={n}, m={m}")));
    }
    Ok(())
}

/// Photon count in output mode 1 of the `m`-mode Fourier interferometer,
/// indistinguishable photons in the first `n` inputs:
/// `P_k = sum_{a=k}^n (-1)^(k+a) C(a,k) C(n,a) a! / m^a`.
pub fn single_mode_bosonic(n: usize, m: usize) -> Result<BinnedDistribution> {
    check_fourier_sizes(n, m)?;
    let probs: Vec<BigRational> = (0..=n)
        .map(|k| {
            (k..=n).fold(BigRational::zero(), |acc, a| {
                let term = ratio(binom(a, k) * binom(n, a) * factorial(a), BigInt::from(m).pow(a as u32));
                if (k + a) % 2 == 0 {
                    acc + term
                } else {
                    acc - term
                }
            })
        })
        .collect();
    from_rationals(n, &probs)
}

/// Same with distinguishable photons: Binomial(n, 1/m).
pub fn single_mode_distinguishable(n: usize, m: usize) -> Result<BinnedDistribution> {
    check_fourier_sizes(n, m)?;
    let probs: Vec<BigRational> = (0..=n)
        .map(|k| ratio(binom(n, k) * BigInt::from(m - 1).pow((n - k) as u32), BigInt::from(m).pow(n as u32)))
        .collect();
    from_rationals(n, &probs)
}

fn check_even(n: usize) -> Result<()> {
    if n < 2 || n % 2 == 1 {
        return Err(Error::Domain(format!("odd-mode law needs even n >= 2, got {n}")));
    }
    Ok(())
}

/// Photon count in the odd output modes `{1, 3, ..}` of the `n`-mode Fourier
/// interferometer with `n` indistinguishable photons: odd counts never occur,
/// `P_k = 2^(-n/2) C(n/2, k/2)` for even `k`.
pub fn odd_modes_bosonic(n: usize) -> Result<BinnedDistribution> {
    check_even(n)?;
    let h = n / 2;
    let den = BigInt::one() << h;
    let probs: Vec<BigRational> =
        (0..=n).map(|k| if k % 2 == 0 { ratio(binom(h, k / 2), den.clone()) } else { BigRational::zero() }).collect();
    from_rationals(n, &probs)
}

/// Same with distinguishable photons: Binomial(n, 1/2).
pub fn odd_modes_distinguishable(n: usize) -> Result<BinnedDistribution> {
    if n == 0 {
        return Err(Error::Domain("need n >= 1".into()));
    }
    let den = BigInt::one() << n;
    let probs: Vec<BigRational> = (0..=n).map(|k| ratio(binom(n, k), den.clone())).collect();
    from_rationals(n, &probs)
}

/// `H[a][b] = sum_{l in subset} conj(U[a][l]) U[b][l]` over all `m` input
/// modes; `subset` is 1-based.
pub fn subset_h(u: &UnitaryMatrix, subset: &[usize]) -> Result<ComplexMatrix> {
    let m = u.dim();
    let mut seen = vec![false; m];
    for &l in subset {
        if l == 0 || l > m || seen[l - 1] {
            return Err(Error::InvalidPartition(format!("bad subset mode {l}")));
        }
        seen[l - 1] = true;
    }
    let um = u.matrix();
    Ok(ComplexMatrix::from_fn(m, m, |a, b| subset.iter().map(|&l| um[(a, l - 1)].conj() * um[(b, l - 1)]).sum()))
}

/// `H'_n = S (.) H_n` for photons in the first `n = S.dim()` inputs.
pub fn h_prime(u: &UnitaryMatrix, gram: &GramMatrix, subset: &[usize]) -> Result<ComplexMatrix> {
    let n = gram.dim();
    if n > u.dim() {
        return Err(Error::Shape(format!("{n} photons do not fit in {} modes", u.dim())));
    }
    let h = subset_h(u, subset)?;
    Ok(h.view((0, 0), (n, n)).component_mul(gram.matrix()))
}

/// Coefficients of `x(eta) = sum_a c_a (1 - e^(i eta))^a` and the photon-count
/// distribution they imply for one subset.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetExpansion {
    /// `c_0 = 1`, `c_a = (-1)^a` times the sum of all `a x a` principal minor
    /// permanents of `H'_n`.
    pub coefficients: Vec<C64>,
    /// `P(k) = (-1)^k sum_{a>=k} C(a,k) c_a`.
    pub distribution: BinnedDistribution,
}

impl SubsetExpansion {
    /// `x(eta)` reassembled from the coefficients.
    pub fn characteristic(&self, eta: f64) -> C64 {
        let t = C64::new(1.0, 0.0) - C64::from_polar(1.0, eta);
        let mut pow = C64::new(1.0, 0.0);
        let mut acc = C64::new(0.0, 0.0);
        for &c in &self.coefficients {
            acc += c * pow;
            pow *= t;
        }
        acc
    }
}

pub fn single_subset_expansion(u: &UnitaryMatrix, gram: &GramMatrix, subset: &[usize]) -> Result<SubsetExpansion> {
    let n = gram.dim();
    if n > EXPANSION_MAX_N {
        return Err(Error::TooLarge(format!("expansion sums 2^{n} minors; limited to n <= {EXPANSION_MAX_N}")));
    }
    let hp = h_prime(u, gram, subset)?;
    let mut sums = vec![C64::new(0.0, 0.0); n + 1];
    for mask in 0u32..(1 << n) {
        let rows: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        let sub = hp.select_rows(&rows).select_columns(&rows);
        sums[rows.len()] += perm_ryser(&sub)?;
    }
    let coefficients: Vec<C64> = sums.iter().enumerate().map(|(a, &s)| if a % 2 == 0 { s } else { -s }).collect();
    let probs: Vec<f64> = (0..=n)
        .map(|k| {
            let s: C64 = (k..=n).map(|a| coefficients[a] * binom(a, k).to_f64().unwrap_or(f64::NAN)).sum();
            if k % 2 == 0 {
                s.re
            } else {
                -s.re
            }
        })
        .collect();
    Ok(SubsetExpansion { coefficients, distribution: BinnedDistribution::cube(n, 1, probs)? })
}

/// Probability that all photons land in the subset, `perm(H'_n)`.
pub fn full_bunching_probability(u: &UnitaryMatrix, gram: &GramMatrix, subset: &[usize]) -> Result<f64> {
    Ok(perm_ryser(&h_prime(u, gram, subset)?)?.re)
}

/// Probability that no photon lands in the subset, `perm(1 - H'_n)`.
pub fn empty_subset_probability(u: &UnitaryMatrix, gram: &GramMatrix, subset: &[usize]) -> Result<f64> {
    let hp = h_prime(u, gram, subset)?;
    let n = hp.nrows();
    Ok(perm_ryser(&(ComplexMatrix::identity(n, n) - hp))?.re)
}

fn check_bins(n: usize, bin_sizes: &[usize], m: usize) -> Result<()> {
    if n == 0 || bin_sizes.is_empty() || bin_sizes.contains(&0) {
        return Err(Error::Domain("need n >= 1 and nonempty bins".into()));
    }
    if bin_sizes.iter().sum::<usize>() != m {
        return Err(Error::InvalidPartition(format!("bin sizes {bin_sizes:?} do not add up to m = {m}")));
    }
    Ok(())
}

fn over_simplex(n: usize, k_bins: usize, prob: impl Fn(&[usize]) -> BigRational) -> Result<BinnedDistribution> {
    let mut dist = BinnedDistribution::zeros(n, vec![n + 1; k_bins])?;
    for i in 0..dist.len() {
        let k = dist.counts_of(i);
        if k.iter().sum::<usize>() == n {
            dist.probabilities_mut()[i] = to_f64(&prob(&k));
        }
    }
    Ok(dist)
}

/// Haar average for distinguishable photons: multinomial with weights
/// `q_z = K_z / m`. Bins must span all `m` modes.
pub fn haar_average_distinguishable(n: usize, bin_sizes: &[usize], m: usize) -> Result<BinnedDistribution> {
    check_bins(n, bin_sizes, m)?;
    over_simplex(n, bin_sizes.len(), |k| multinomial_weight(n, bin_sizes, m, k))
}

fn multinomial_weight(n: usize, bin_sizes: &[usize], m: usize, k: &[usize]) -> BigRational {
    let mut num = factorial(n);
    let mut den = BigInt::from(m).pow(n as u32);
    for (&kz, &size) in k.iter().zip(bin_sizes) {
        num *= BigInt::from(size).pow(kz as u32);
        den *= factorial(kz);
    }
    ratio(num, den)
}

/// Haar average for indistinguishable photons:
/// `p^D(k) prod_z prod_{l<k_z} (1 + l/K_z) / prod_{l<n} (1 + l/m)`.
pub fn haar_average_bosonic(n: usize, bin_sizes: &[usize], m: usize) -> Result<BinnedDistribution> {
    check_bins(n, bin_sizes, m)?;
    over_simplex(n, bin_sizes.len(), |k| {
        let mut p = multinomial_weight(n, bin_sizes, m, k);
        for (&kz, &size) in k.iter().zip(bin_sizes) {
            for l in 0..kz {
                p *= ratio(BigInt::from(size + l), BigInt::from(size));
            }
        }
        for l in 0..n {
            p *= ratio(BigInt::from(m), BigInt::from(m + l));
        }
        p
    })
}

/// Leading-order Gaussian density of the Haar-averaged bin counts,
/// `sigma = 1` for indistinguishable and `0` for distinguishable photons.
///
/// `k` holds all `K` counts (real-valued); with `x_z = k_z / n` the density is
/// `exp(-n sum_z (x_z - q_z)^2 / (2 (1 + sigma rho) q_z)) /
/// ((2 pi (1 + sigma rho) n)^((K-1)/2) prod_z sqrt(q_z))`.
pub fn gaussian_asymptotic(n: usize, m: usize, q: &[f64], sigma: u8, k: &[f64]) -> Result<f64> {
    if sigma > 1 {
        return Err(Error::Domain(format!("sigma must be 0 or 1, got {sigma}")));
    }
    if n == 0 || m == 0 {
        return Err(Error::Domain("need n, m >= 1".into()));
    }
    if q.is_empty() || q.iter().any(|&v| !(v > 0.0)) || (q.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("bin fractions {q:?} must be positive and sum to 1")));
    }
    if k.len() != q.len() {
        return Err(Error::Shape(format!("{} counts for {} bins", k.len(), q.len())));
    }
    let nf = n as f64;
    let width = 1.0 + sigma as f64 * nf / m as f64;
    let exponent: f64 =
        k.iter().zip(q).map(|(&kz, &qz)| (kz / nf - qz).powi(2) / (2.0 * width * qz)).sum::<f64>() * -nf;
    let norm = (2.0 * std::f64::consts::PI * width * nf).powf((q.len() - 1) as f64 / 2.0)
        * q.iter().map(|v| v.sqrt()).product::<f64>();
    Ok(exponent.exp() / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{fourier_matrix, haar_unitary};
    use crate::noise::gram_interpolation;

    fn assert_probs(d: &BinnedDistribution, expect: &[f64], tol: f64) {
        assert_eq!(d.len(), expect.len());
        for (a, b) in d.probabilities().iter().zip(expect) {
            assert!((a - b).abs() <= tol, "{:?} vs {expect:?}", d.probabilities());
        }
    }

    #[test]
    fn single_mode_examples() {
        assert_probs(&single_mode_bosonic(2, 2).unwrap(), &[0.5, 0.0, 0.5], 1e-15);
        assert_probs(&single_mode_distinguishable(2, 2).unwrap(), &[0.25, 0.5, 0.25], 1e-15);
        assert_probs(&single_mode_distinguishable(1, 5).unwrap(), &[0.8, 0.2], 1e-15);
        for n in 2..=8 {
            let b = single_mode_bosonic(n, n).unwrap();
            assert!(b.prob(&[n - 1]).abs() < 1e-15);
            assert!((b.total() - 1.0).abs() < 1e-12);
        }
        for n in 1..=10 {
            assert!((single_mode_bosonic(n, n).unwrap().mean(0) - 1.0).abs() < 1e-9);
            let d = single_mode_distinguishable(n, 12).unwrap();
            assert!((d.mean(0) - n as f64 / 12.0).abs() < 1e-12);
        }
        assert!(single_mode_bosonic(3, 2).is_err());
        assert!(single_mode_distinguishable(0, 2).is_err());
    }

    #[test]
    fn odd_mode_examples() {
        assert_probs(&odd_modes_bosonic(2).unwrap(), &[0.5, 0.0, 0.5], 1e-15);
        assert_probs(&odd_modes_bosonic(4).unwrap(), &[0.25, 0.0, 0.5, 0.0, 0.25], 1e-15);
        for n in (2..=12).step_by(2) {
            assert!((odd_modes_bosonic(n).unwrap().total() - 1.0).abs() < 1e-15);
        }
        assert!(odd_modes_bosonic(3).is_err());
        assert_probs(&odd_modes_distinguishable(2).unwrap(), &[0.25, 0.5, 0.25], 1e-15);
        let d = odd_modes_distinguishable(7).unwrap();
        for k in 0..=7 {
            assert_eq!(d.prob(&[k]), d.prob(&[7 - k]));
        }
        assert!((d.mean(0) - 3.5).abs() < 1e-12);
    }

    #[test]
    fn subset_h_examples() {
        let u = haar_unitary(5, 9).unwrap();
        let h = subset_h(&u, &[1, 2, 3, 4, 5]).unwrap();
        assert!(crate::linalg::max_abs_diff(&h, &ComplexMatrix::identity(5, 5)) < 1e-12);
        let f = fourier_matrix(6).unwrap();
        let h = subset_h(&f, &[1]).unwrap();
        assert!(h.iter().all(|z| (z - C64::new(1.0 / 6.0, 0.0)).norm() < 1e-15));
        let h = subset_h(&u, &[2, 5]).unwrap();
        let eig = h.symmetric_eigenvalues();
        assert!(eig.iter().all(|&e| (-1e-12..=1.0 + 1e-12).contains(&e)));
        let trace: f64 = (0..5).map(|a| u.get(a, 1).norm_sqr() + u.get(a, 4).norm_sqr()).sum();
        assert!((h.trace().re - trace).abs() < 1e-12);
        assert!(subset_h(&u, &[2, 2]).is_err());
        assert!(subset_h(&u, &[6]).is_err());
    }

    #[test]
    fn expansion_reproduces_fourier_single_mode() {
        for n in 1..=6 {
            let f = fourier_matrix(n).unwrap();
            let e = single_subset_expansion(&f, &gram_interpolation(n, 1.0).unwrap(), &[1]).unwrap();
            let closed = single_mode_bosonic(n, n).unwrap();
            for (a, b) in e.distribution.probabilities().iter().zip(closed.probabilities()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn expansion_endpoints() {
        let u = haar_unitary(6, 4).unwrap();
        let g = gram_interpolation(4, 0.7).unwrap();
        let e = single_subset_expansion(&u, &g, &[2, 3, 6]).unwrap();
        let pn = full_bunching_probability(&u, &g, &[2, 3, 6]).unwrap();
        let p0 = empty_subset_probability(&u, &g, &[2, 3, 6]).unwrap();
        assert!((e.distribution.prob(&[4]) - pn).abs() < 1e-12);
        assert!((e.distribution.prob(&[0]) - p0).abs() < 1e-12);
        assert!((e.characteristic(0.0) - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(single_subset_expansion(&haar_unitary(12, 1).unwrap(), &gram_interpolation(11, 1.0).unwrap(), &[1])
            .is_err());
    }

    #[test]
    fn haar_average_examples() {
        let d = haar_average_distinguishable(2, &[1, 1], 2).unwrap();
        assert_eq!(d.axis_marginal(0), vec![0.25, 0.5, 0.25]);
        for n in 1..=6 {
            let d = haar_average_distinguishable(n, &[3, 2, 4], 9).unwrap();
            assert!((d.total() - 1.0).abs() < 1e-12);
            let b = haar_average_bosonic(n, &[3, 2, 4], 9).unwrap();
            assert!((b.total() - 1.0).abs() < 1e-9);
        }
        let d = haar_average_distinguishable(1, &[3, 5], 8).unwrap();
        let b = haar_average_bosonic(1, &[3, 5], 8).unwrap();
        assert_eq!(d, b);
        assert!(haar_average_bosonic(2, &[3, 4], 8).is_err());
    }

    #[test]
    fn bosonic_average_is_uniform_on_symmetric_subspace() {
        // prod_z C(K_z + k_z - 1, k_z) / C(m + n - 1, n)
        let (n, sizes, m) = (4usize, [3usize, 5usize], 8usize);
        let b = haar_average_bosonic(n, &sizes, m).unwrap();
        for k1 in 0..=n {
            let k = [k1, n - k1];
            let num = binom(sizes[0] + k[0] - 1, k[0]) * binom(sizes[1] + k[1] - 1, k[1]);
            let p = ratio(num, binom(m + n - 1, n));
            assert!((b.prob(&k) - to_f64(&p)).abs() < 1e-15);
        }
    }

    #[test]
    fn gaussian_examples() {
        let (n, m) = (100, 200);
        let q = [0.3, 0.7];
        let peak = gaussian_asymptotic(n, m, &q, 0, &[30.0, 70.0]).unwrap();
        assert!(peak > gaussian_asymptotic(n, m, &q, 0, &[31.0, 69.0]).unwrap());
        assert!(peak > gaussian_asymptotic(n, m, &q, 0, &[29.0, 71.0]).unwrap());
        // variance along k_1 from the density itself
        let moments = |sigma: u8| {
            let (mut z, mut s1, mut s2) = (0.0, 0.0, 0.0);
            let steps = 20000;
            for i in 0..=steps {
                let k1 = n as f64 * i as f64 / steps as f64;
                let w = gaussian_asymptotic(n, m, &q, sigma, &[k1, n as f64 - k1]).unwrap() * n as f64 / steps as f64;
                z += w;
                s1 += w * k1;
                s2 += w * k1 * k1;
            }
            (z, s2 / z - (s1 / z).powi(2))
        };
        let (z0, v0) = moments(0);
        let (z1, v1) = moments(1);
        assert!((z0 - 1.0).abs() < 0.05 && (z1 - 1.0).abs() < 0.05);
        // truncation at k_1 = 0 trims the far tail slightly
        assert!((v1 / v0 - 1.5).abs() < 1e-4, "{v0} {v1}");
        assert!(gaussian_asymptotic(n, m, &[0.5, 0.4], 0, &[1.0, 1.0]).is_err());
        assert!(gaussian_asymptotic(n, m, &q, 2, &[1.0, 1.0]).is_err());
    }
}
