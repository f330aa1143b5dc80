//! Randomized invariants.

use boson_bins::linalg::{haar_unitary, C64};
use boson_bins::noise::{dark_counts_convolve, gram_interpolation};
use boson_bins::partitions::{binned_distribution, equipartition, InputSpec, Method, Partition};
use boson_bins::permanent::{perm_naive, perm_ryser};
use boson_bins::validation::{p_null_from_log_chi, tvd};
use boson_bins::ComplexMatrix;
use proptest::prelude::*;

fn matrix(n: usize, entries: &[(f64, f64)]) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |i, j| {
        let (re, im) = entries[i * n + j];
        C64::new(re, im)
    })
}

fn square() -> impl Strategy<Value = ComplexMatrix> {
    (1usize..=6)
        .prop_flat_map(|n| prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n).prop_map(move |e| matrix(n, &e)))
}

/// `(n, m, K, x, seed)` with `1 <= n <= m <= 6`, `K <= min(m, 3)`.
fn model() -> impl Strategy<Value = (usize, usize, usize, f64, u64)> {
    (1usize..=4, 0usize..=2, 1usize..=3, 0.0f64..=1.0, any::<u64>()).prop_map(|(n, extra, k, x, seed)| {
        let m = (n + extra).max(2);
        (n, m, k.min(m), x, seed)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ryser_matches_naive(a in square()) {
        let r = perm_ryser(&a).unwrap();
        let s = perm_naive(&a).unwrap();
        prop_assert!((r - s).norm() <= 1e-10 * (1.0 + s.norm()));
    }

    #[test]
    fn distribution_is_normalized((n, m, k, x, seed) in model()) {
        let u = haar_unitary(m, seed).unwrap();
        let part = equipartition(m, k).unwrap();
        let input = InputSpec::standard(m, gram_interpolation(n, x).unwrap()).unwrap();
        let d = binned_distribution(&u, &input, &part, &Method::Ryser).unwrap();
        prop_assert!((d.total() - 1.0).abs() < 1e-12);
        prop_assert!(d.probabilities().iter().all(|&p| p >= 0.0));
        prop_assert!(d.mass_off_total(n) < 1e-12);
    }

    #[test]
    fn relabeling_bins_permutes_axes((n, m, k, x, seed) in model(), rot in 0usize..3) {
        let u = haar_unitary(m, seed).unwrap();
        let part = equipartition(m, k).unwrap();
        let order: Vec<usize> = (0..k).map(|z| (z + rot) % k).collect();
        let moved = part.reordered(&order).unwrap();
        let input = InputSpec::standard(m, gram_interpolation(n, x).unwrap()).unwrap();
        let a = binned_distribution(&u, &input, &part, &Method::Ryser).unwrap();
        let b = binned_distribution(&u, &input, &moved, &Method::Ryser).unwrap();
        let a = a.permute_axes(&order).unwrap();
        prop_assert!(tvd(&a, &b).unwrap() < 1e-10);
    }

    #[test]
    fn mode_marginal_mean_is_linear((n, m, _k, x, seed) in model()) {
        // E[k_z] = sum_{l in bin} sum_{j<n} |U_jl|^2, whatever the overlaps
        let u = haar_unitary(m, seed).unwrap();
        let part = Partition::from_zero_based(vec![vec![0]], m).unwrap();
        let input = InputSpec::standard(m, gram_interpolation(n, x).unwrap()).unwrap();
        let d = binned_distribution(&u, &input, &part, &Method::Ryser).unwrap();
        let expected: f64 = (0..n).map(|j| u.get(j, 0).norm_sqr()).sum();
        prop_assert!((d.mean(0) - expected).abs() < 1e-10);
    }

    #[test]
    fn dark_counts_keep_mass((n, m, k, x, seed) in model(), p in 0.0f64..0.5) {
        let u = haar_unitary(m, seed).unwrap();
        let part = equipartition(m, k).unwrap();
        let input = InputSpec::standard(m, gram_interpolation(n, x).unwrap()).unwrap();
        let d = binned_distribution(&u, &input, &part, &Method::Ryser).unwrap();
        let sizes = part.bin_sizes();
        let noisy = dark_counts_convolve(&d, p, &sizes).unwrap();
        prop_assert!((noisy.total() - 1.0).abs() < 1e-12);
        for (z, &size) in sizes.iter().enumerate() {
            prop_assert!((noisy.mean(z) - d.mean(z) - p * size as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn tvd_is_a_metric((n, m, k, x, seed) in model(), y in 0.0f64..=1.0) {
        let u = haar_unitary(m, seed).unwrap();
        let part = equipartition(m, k).unwrap();
        let a = InputSpec::standard(m, gram_interpolation(n, x).unwrap()).unwrap();
        let b = InputSpec::standard(m, gram_interpolation(n, y).unwrap()).unwrap();
        let p = binned_distribution(&u, &a, &part, &Method::Ryser).unwrap();
        let q = binned_distribution(&u, &b, &part, &Method::Ryser).unwrap();
        let d = tvd(&p, &q).unwrap();
        prop_assert!((d - tvd(&q, &p).unwrap()).abs() < 1e-15);
        prop_assert!((0.0..=2.0 + 1e-12).contains(&d));
        prop_assert_eq!(tvd(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn p_null_is_monotone(a in -800.0f64..800.0, b in -800.0f64..800.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (pl, ph) = (p_null_from_log_chi(lo), p_null_from_log_chi(hi));
        prop_assert!(pl <= ph);
        prop_assert!((0.0..=1.0).contains(&pl) && (0.0..=1.0).contains(&ph));
    }
}
