//! Binned photon-counting distributions.
//!
//! For a partition of the output modes into bins, the characteristic function
//! `x(eta) = E[exp(i eta . k)]` of the bin counts equals the permanent of
//! `S (.) V_n(eta)`, the Hadamard product of the photons' Gram matrix with the
//! input-restricted virtual interferometer `V(eta)` (the interferometer, a
//! diagonal phase `exp(i eta_z)` on every output mode of bin `z`, and the
//! interferometer undone). Sampling `x` on the grid `2 pi l / (n + 1)` and
//! inverting the discrete Fourier transform gives every `P(k)`.

mod distribution;
mod grid;

pub use distribution::{BinnedDistribution, DistributionDoc, MethodInfo, ProbabilityEntry};
pub use grid::{CharacteristicFunction, CharacteristicGrid};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, UnitaryMatrix, C64};
use crate::noise::GramMatrix;
use crate::permanent::perm_ryser;

/// Negative probabilities above this are rounding and get clipped to zero.
pub const CLAMP_TOL: f64 = 1e-9;
/// Largest imaginary residue accepted on the exact path.
pub const IMAG_TOL: f64 = 1e-9;
/// Largest normalization deficit before the exact path reports a failure.
pub const NORMALIZATION_TOL: f64 = 1e-6;
/// Singular values above this count towards the rank of `W(eta)`.
pub const RANK_TOL: f64 = 1e-8;

/// Disjoint, nonempty bins of output modes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    bins: Vec<Vec<usize>>,
    total_modes: usize,
}

impl Partition {
    /// Bins given with 1-based mode indices in `1..=total_modes`.
    pub fn new(subsets: Vec<Vec<usize>>, total_modes: usize) -> Result<Self> {
        let mut zero_based = Vec::with_capacity(subsets.len());
        for s in subsets {
            let mut bin = Vec::with_capacity(s.len());
            for mode in s {
                if mode == 0 || mode > total_modes {
                    return Err(Error::InvalidPartition(format!("mode {mode} outside 1..={total_modes}")));
                }
                bin.push(mode - 1);
            }
            zero_based.push(bin);
        }
        Self::from_zero_based(zero_based, total_modes)
    }

    /// Bins given with 0-based mode indices.
    pub fn from_zero_based(mut bins: Vec<Vec<usize>>, total_modes: usize) -> Result<Self> {
        if bins.is_empty() {
            return Err(Error::InvalidPartition("need at least one bin".into()));
        }
        let mut owner = vec![false; total_modes];
        for (z, bin) in bins.iter_mut().enumerate() {
            if bin.is_empty() {
                return Err(Error::InvalidPartition(format!("bin {} is empty", z + 1)));
            }
            bin.sort_unstable();
            for &mode in bin.iter() {
                if mode >= total_modes {
                    return Err(Error::InvalidPartition(format!("mode {} outside 1..={total_modes}", mode + 1)));
                }
                if owner[mode] {
                    return Err(Error::InvalidPartition(format!("mode {} appears more than once", mode + 1)));
                }
                owner[mode] = true;
            }
        }
        Ok(Self { bins, total_modes })
    }

    /// 0-based bins.
    pub fn bins(&self) -> &[Vec<usize>] {
        &self.bins
    }

    pub fn one_based(&self) -> Vec<Vec<usize>> {
        self.bins.iter().map(|b| b.iter().map(|m| m + 1).collect()).collect()
    }

    pub fn num_bins(&self) -> usize {
        self.bins.len()
    }

    pub fn total_modes(&self) -> usize {
        self.total_modes
    }

    /// `K_z`.
    pub fn bin_sizes(&self) -> Vec<usize> {
        self.bins.iter().map(Vec::len).collect()
    }

    /// `q_z = K_z / M`.
    pub fn relative_sizes(&self) -> Vec<f64> {
        self.bins.iter().map(|b| b.len() as f64 / self.total_modes as f64).collect()
    }

    /// Whether every mode belongs to some bin.
    pub fn spans_all_modes(&self) -> bool {
        self.bins.iter().map(Vec::len).sum::<usize>() == self.total_modes
    }

    /// Bin index of each mode.
    pub fn bin_of_mode(&self) -> Vec<Option<usize>> {
        let mut owner = vec![None; self.total_modes];
        for (z, bin) in self.bins.iter().enumerate() {
            for &mode in bin {
                owner[mode] = Some(z);
            }
        }
        owner
    }

    /// Same bins in a different order: bin `z` of the result is bin `order[z]`.
    pub fn reordered(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.bins.len() {
            return Err(Error::InvalidPartition("reorder length mismatch".into()));
        }
        let bins = order
            .iter()
            .map(|&z| self.bins.get(z).cloned().ok_or_else(|| Error::InvalidPartition("bad bin".into())))
            .collect::<Result<Vec<_>>>()?;
        Self::from_zero_based(bins, self.total_modes)
    }
}

/// Consecutive-mode bins. With `M = p (K - 1) + q`, the first `K - 1` bins
/// hold `p = ceil(M / K)` modes and the last `q`; when that leaves `q < 1`,
/// `p = floor(M / K)` is used instead.
pub fn equipartition(total_modes: usize, num_bins: usize) -> Result<Partition> {
    if num_bins == 0 || num_bins > total_modes {
        return Err(Error::InvalidPartition(format!("cannot split {total_modes} modes into {num_bins} nonempty bins")));
    }
    let mut p = total_modes.div_ceil(num_bins);
    if p * (num_bins - 1) >= total_modes {
        p = total_modes / num_bins;
    }
    let mut bins = Vec::with_capacity(num_bins);
    for z in 0..num_bins - 1 {
        bins.push((z * p..(z + 1) * p).collect());
    }
    bins.push(((num_bins - 1) * p..total_modes).collect());
    Partition::from_zero_based(bins, total_modes)
}

/// One phase per bin, in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseVector(pub Vec<f64>);

impl PhaseVector {
    pub fn zeros(k: usize) -> Self {
        Self(vec![0.0; k])
    }

    /// Grid point `2 pi l / (n + 1)`.
    pub fn grid_point(l: &[usize], n: usize) -> Self {
        let step = 2.0 * std::f64::consts::PI / (n + 1) as f64;
        Self(l.iter().map(|&lz| step * lz as f64).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn check(&self, partition: &Partition) -> Result<()> {
        if self.0.len() != partition.num_bins() {
            return Err(Error::Shape(format!(
                "phase vector has {} entries, partition has {} bins",
                self.0.len(),
                partition.num_bins()
            )));
        }
        if self.0.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite phase".into()));
        }
        Ok(())
    }
}

/// Input occupation `r` (photons per input mode) and photon Gram matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSpec {
    occupation: Vec<usize>,
    gram: GramMatrix,
    assignment: Vec<usize>,
    norm: f64,
}

impl InputSpec {
    /// Photons are ordered by input mode; photon `p` sits in mode
    /// `assignment[p]` and row/column `p` of `gram` describes it.
    pub fn new(occupation: Vec<usize>, gram: GramMatrix) -> Result<Self> {
        let assignment: Vec<usize> =
            occupation.iter().enumerate().flat_map(|(mode, &r)| std::iter::repeat_n(mode, r)).collect();
        let n = assignment.len();
        if n == 0 {
            return Err(Error::InvalidDimension("input needs at least one photon".into()));
        }
        if gram.dim() != n {
            return Err(Error::Shape(format!("Gram matrix is {0}x{0} but n = {n}", gram.dim())));
        }
        // squared norm of the input state: perm(S (.) [d_p == d_q])
        let same_mode =
            DMatrix::from_fn(
                n,
                n,
                |p, q| {
                    if assignment[p] == assignment[q] {
                        gram.get(p, q)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                },
            );
        let norm = perm_ryser(&same_mode)?.re;
        if !(norm > 0.0) {
            return Err(Error::InvalidGram("input state has zero norm".into()));
        }
        Ok(Self { occupation, gram, assignment, norm })
    }

    /// One photon in each of the first `n` of `m` input modes.
    pub fn standard(m: usize, gram: GramMatrix) -> Result<Self> {
        let n = gram.dim();
        if n > m {
            return Err(Error::Shape(format!("{n} photons do not fit in {m} modes")));
        }
        let mut occ = vec![0; m];
        occ[..n].fill(1);
        Self::new(occ, gram)
    }

    /// Same photons in a larger interferometer (extra empty modes appended).
    pub fn padded(&self, m: usize) -> Result<Self> {
        if m < self.occupation.len() {
            return Err(Error::Shape("cannot shrink an input".into()));
        }
        let mut occ = self.occupation.clone();
        occ.resize(m, 0);
        Ok(Self { occupation: occ, ..self.clone() })
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn num_modes(&self) -> usize {
        self.occupation.len()
    }

    pub fn occupation(&self) -> &[usize] {
        &self.occupation
    }

    pub fn gram(&self) -> &GramMatrix {
        &self.gram
    }

    /// Input mode of each photon.
    pub fn mode_assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// `mu(r) = prod_j r_j!`.
    pub fn mu(&self) -> f64 {
        self.occupation.iter().map(|&r| (1..=r).map(|v| v as f64).product::<f64>()).product()
    }

    /// Squared norm of the unnormalized input state; equals `mu(r)` when
    /// photons sharing an input mode have identical internal states.
    pub fn state_norm(&self) -> f64 {
        self.norm
    }
}

/// How permanents are evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Ryser,
    Glynn { epsilon: f64, seed: u64 },
}

/// Diagonal `Lambda(eta)`: `exp(i eta_z)` on modes of bin `z`, 1 elsewhere.
pub fn phase_mask(partition: &Partition, eta: &PhaseVector) -> Result<ComplexMatrix> {
    eta.check(partition)?;
    let mut lambda = ComplexMatrix::identity(partition.total_modes(), partition.total_modes());
    for (bin, &phase) in partition.bins().iter().zip(&eta.0) {
        let f = C64::from_polar(1.0, phase);
        for &mode in bin {
            lambda[(mode, mode)] = f;
        }
    }
    Ok(lambda)
}

fn check_dims(u: &UnitaryMatrix, partition: &Partition) -> Result<()> {
    if partition.total_modes() != u.dim() {
        return Err(Error::Shape(format!(
            "partition lives on {} modes, interferometer has {}",
            partition.total_modes(),
            u.dim()
        )));
    }
    Ok(())
}

/// `V(eta)` with entries `V[i][j] = sum_k conj(U[i][k]) lambda_k U[j][k]`;
/// `x(eta)` is the permanent of its input block Hadamard the Gram matrix.
pub fn virtual_interferometer(u: &UnitaryMatrix, partition: &Partition, eta: &PhaseVector) -> Result<ComplexMatrix> {
    check_dims(u, partition)?;
    let lambda = phase_mask(partition, eta)?;
    let um = u.matrix();
    Ok(um.map(|z| z.conj()) * lambda * um.transpose())
}

/// `x(eta)` for one phase vector.
pub fn characteristic_value(
    u: &UnitaryMatrix,
    input: &InputSpec,
    partition: &Partition,
    eta: &PhaseVector,
    method: &Method,
) -> Result<C64> {
    let cf = CharacteristicFunction::new(u, input, partition)?;
    cf.value(eta, method)
}

/// Diagnostics of the Fourier inversion, before clipping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionDiagnostics {
    pub min_raw: f64,
    pub max_imag: f64,
    pub raw_total: f64,
}

/// A distribution together with how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct ComputedDistribution {
    pub distribution: BinnedDistribution,
    pub method: MethodInfo,
    pub diagnostics: InversionDiagnostics,
}

/// Exact (or Glynn-estimated) binned distribution with metadata.
pub fn binned_distribution_with(
    u: &UnitaryMatrix,
    input: &InputSpec,
    partition: &Partition,
    method: &Method,
) -> Result<ComputedDistribution> {
    let cf = CharacteristicFunction::new(u, input, partition)?;
    let grid = cf.grid(method)?;
    let (raw, diagnostics) = grid.invert();
    let n = input.n();
    let k = partition.num_bins();
    match *method {
        Method::Ryser => {
            if diagnostics.max_imag > IMAG_TOL {
                return Err(Error::Numerical(format!(
                    "imaginary residue {:e} in inverted distribution",
                    diagnostics.max_imag
                )));
            }
            if diagnostics.min_raw < -CLAMP_TOL {
                return Err(Error::Numerical(format!(
                    "probability {:e} below clipping tolerance",
                    diagnostics.min_raw
                )));
            }
            if (diagnostics.raw_total - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::Numerical(format!("distribution sums to {}", diagnostics.raw_total)));
            }
            let probs = clip_and_rescale(raw)?;
            Ok(ComputedDistribution {
                distribution: BinnedDistribution::cube(n, k, probs)?,
                method: MethodInfo::exact(),
                diagnostics,
            })
        }
        Method::Glynn { epsilon, seed } => {
            let probs = clip_and_rescale(raw)?;
            let mut info = MethodInfo::named("glynn");
            info.epsilon = Some(epsilon);
            info.trials_per_point = Some(crate::permanent::glynn_trials(epsilon));
            info.seed = Some(seed);
            info.raw_total = Some(diagnostics.raw_total);
            info.renormalized = Some(true);
            Ok(ComputedDistribution { distribution: BinnedDistribution::cube(n, k, probs)?, method: info, diagnostics })
        }
    }
}

fn clip_and_rescale(mut probs: Vec<f64>) -> Result<Vec<f64>> {
    for p in probs.iter_mut() {
        if *p < 0.0 {
            *p = 0.0;
        }
    }
    let total: f64 = probs.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Numerical("distribution has no positive mass".into()));
    }
    for p in probs.iter_mut() {
        *p /= total;
    }
    Ok(probs)
}

/// Exact binned distribution `P(k)` over `{0..n}^K`.
pub fn binned_distribution(
    u: &UnitaryMatrix,
    input: &InputSpec,
    partition: &Partition,
    method: &Method,
) -> Result<BinnedDistribution> {
    Ok(binned_distribution_with(u, input, partition, method)?.distribution)
}

/// Approximate distribution with l1 error at most `beta` (with high
/// probability): every grid value is estimated to `beta (n+1)^(-K/2)`.
pub fn approx_binned_distribution(
    u: &UnitaryMatrix,
    input: &InputSpec,
    partition: &Partition,
    beta: f64,
    seed: u64,
) -> Result<ComputedDistribution> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Domain(format!("beta must be > 0, got {beta}")));
    }
    let epsilon = point_precision(beta, input.n(), partition.num_bins());
    let mut out = binned_distribution_with(u, input, partition, &Method::Glynn { epsilon, seed })?;
    out.method.beta = Some(beta);
    Ok(out)
}

/// Per-grid-point precision needed for total l1 error `beta`.
pub fn point_precision(beta: f64, n: usize, k: usize) -> f64 {
    beta * ((n + 1) as f64).powf(-(k as f64) / 2.0)
}

/// Joint distribution of the counts in single output modes (1-based).
pub fn marginal_distribution(u: &UnitaryMatrix, input: &InputSpec, modes: &[usize]) -> Result<BinnedDistribution> {
    let partition = Partition::new(modes.iter().map(|&m| vec![m]).collect(), u.dim())?;
    binned_distribution(u, input, &partition, &Method::Ryser)
}

/// Numerical rank of `W(eta) = V(eta) - 1` and the bound it must respect.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankCheck {
    pub rank: usize,
    /// Number of modes receiving a nontrivial phase.
    pub bound: usize,
}

pub fn rank_check_w(u: &UnitaryMatrix, partition: &Partition, eta: &PhaseVector) -> Result<RankCheck> {
    let v = virtual_interferometer(u, partition, eta)?;
    let m = v.nrows();
    let w = v - ComplexMatrix::identity(m, m);
    let rank = w.singular_values().iter().filter(|&&s| s > RANK_TOL).count();
    let bound = partition
        .bins()
        .iter()
        .zip(&eta.0)
        .filter(|(_, &phase)| (C64::from_polar(1.0, phase) - C64::new(1.0, 0.0)).norm() > RANK_TOL)
        .map(|(bin, _)| bin.len())
        .sum();
    debug_assert!(rank <= bound, "rank {rank} exceeds bound {bound}");
    Ok(RankCheck { rank, bound })
}
