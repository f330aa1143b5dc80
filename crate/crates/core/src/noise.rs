//! Noise models: partial distinguishability through the Gram matrix of the
//! photons' internal states, uniform loss, and detector dark counts.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{embed_uniform_loss, ComplexMatrix, UnitaryFile, UnitaryMatrix, C64};
use crate::partitions::{
    binned_distribution_with, BinnedDistribution, ComputedDistribution, InputSpec, Method, Partition,
};

/// Hermiticity tolerance.
const HERMITIAN_TOL: f64 = 1e-12;
/// Smallest eigenvalue accepted as positive semidefinite.
pub const PSD_SLACK: f64 = 1e-9;
/// Norm tolerance for internal states.
const STATE_NORM_TOL: f64 = 1e-10;

/// Overlaps `S[i][j] = <phi_i|phi_j>` of the photons' internal states.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix(ComplexMatrix);

impl GramMatrix {
    /// Validates Hermiticity, unit diagonal and positive semidefiniteness.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || !matrix.is_square() {
            return Err(Error::InvalidGram(format!(
                "Gram matrix must be square and nonempty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        for i in 0..n {
            if matrix[(i, i)] != C64::new(1.0, 0.0) {
                return Err(Error::InvalidGram(format!(
                    "diagonal entry {} is {} (must be exactly 1)",
                    i + 1,
                    matrix[(i, i)]
                )));
            }
            for j in 0..i {
                if (matrix[(i, j)] - matrix[(j, i)].conj()).norm() > HERMITIAN_TOL {
                    return Err(Error::InvalidGram(format!("not Hermitian at ({}, {})", i + 1, j + 1)));
                }
            }
        }
        let eig = matrix.clone().symmetric_eigenvalues();
        let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -PSD_SLACK {
            return Err(Error::InvalidGram(format!("not positive semidefinite (eigenvalue {min:e})")));
        }
        Ok(Self(matrix))
    }

    /// Fully indistinguishable photons (all-ones matrix).
    pub fn indistinguishable(n: usize) -> Self {
        Self(ComplexMatrix::from_element(n, n, C64::new(1.0, 0.0)))
    }

    /// Fully distinguishable photons (identity).
    pub fn distinguishable(n: usize) -> Self {
        Self(ComplexMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn to_file(&self) -> UnitaryFile {
        let n = self.dim();
        UnitaryFile {
            dim: n,
            re: (0..n).map(|r| (0..n).map(|c| self.0[(r, c)].re).collect()).collect(),
            im: (0..n).map(|r| (0..n).map(|c| self.0[(r, c)].im).collect()).collect(),
        }
    }

    pub fn from_file(file: &UnitaryFile) -> Result<Self> {
        Self::new(file.to_matrix()?)
    }
}

/// Equal pairwise overlap `x`: `S = (1 - x) 1 + x J`.
pub fn gram_interpolation(n: usize, x: f64) -> Result<GramMatrix> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("distinguishability x = {x} outside [0, 1]")));
    }
    if n == 0 {
        return Err(Error::InvalidDimension("need at least one photon".into()));
    }
    let m = ComplexMatrix::from_fn(n, n, |i, j| C64::new(if i == j { 1.0 } else { x }, 0.0));
    GramMatrix::new(m)
}

/// Gram matrix of explicit internal states (one vector per photon).
pub fn gram_from_states(states: &[DVector<C64>]) -> Result<GramMatrix> {
    let n = states.len();
    if n == 0 {
        return Err(Error::InvalidDimension("need at least one state".into()));
    }
    let d = states[0].len();
    if states.iter().any(|s| s.len() != d) {
        return Err(Error::Shape("internal states have different dimensions".into()));
    }
    for (i, s) in states.iter().enumerate() {
        let norm = s.norm();
        if (norm - 1.0).abs() > STATE_NORM_TOL {
            return Err(Error::InvalidGram(format!("state {} has norm {norm}", i + 1)));
        }
    }
    let m = ComplexMatrix::from_fn(n, n, |i, j| if i == j { C64::new(1.0, 0.0) } else { states[i].dotc(&states[j]) });
    GramMatrix::new(m)
}

/// Noise parameters of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// Pairwise overlap of the x-model; ignored when `gram` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gram: Option<UnitaryFile>,
    #[serde(default = "one")]
    pub transmissivity: f64,
    #[serde(default)]
    pub dark_count_p: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { x: None, gram: None, transmissivity: 1.0, dark_count_p: 0.0 }
    }
}

impl NoiseConfig {
    pub fn ideal() -> Self {
        Self { x: Some(1.0), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(x) = self.x {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::Domain(format!("x = {x} outside [0, 1]")));
            }
        }
        if !(0.0..=1.0).contains(&self.transmissivity) {
            return Err(Error::Domain(format!("transmissivity {} outside [0, 1]", self.transmissivity)));
        }
        if !(0.0..1.0).contains(&self.dark_count_p) {
            return Err(Error::Domain(format!("dark_count_p {} outside [0, 1)", self.dark_count_p)));
        }
        Ok(())
    }

    /// Gram matrix for `n` photons (x defaults to 1).
    pub fn gram(&self, n: usize) -> Result<GramMatrix> {
        match &self.gram {
            Some(file) => {
                let g = GramMatrix::from_file(file)?;
                if g.dim() != n {
                    return Err(Error::Shape(format!("Gram matrix is {}x{} but n = {n}", g.dim(), g.dim())));
                }
                Ok(g)
            }
            None => gram_interpolation(n, self.x.unwrap_or(1.0)),
        }
    }
}

/// Binned distribution of the lossy interferometer. The result has `K + 1`
/// axes; the last one counts photons lost to the environment.
pub fn lossy_binned_distribution(
    u: &UnitaryMatrix,
    input: &InputSpec,
    partition: &Partition,
    transmissivity: f64,
    method: &Method,
) -> Result<BinnedDistribution> {
    Ok(lossy_binned_distribution_with(u, input, partition, transmissivity, method)?.distribution)
}

/// Same, with method metadata and inversion diagnostics.
pub fn lossy_binned_distribution_with(
    u: &UnitaryMatrix,
    input: &InputSpec,
    partition: &Partition,
    transmissivity: f64,
    method: &Method,
) -> Result<ComputedDistribution> {
    let big = embed_uniform_loss(u, transmissivity)?;
    let extended = lossy_partition(partition, u.dim())?;
    let big_input = input.padded(2 * u.dim())?;
    binned_distribution_with(&big, &big_input, &extended, method)
}

/// `partition` of the physical modes plus one bin with all environment modes.
pub fn lossy_partition(partition: &Partition, m: usize) -> Result<Partition> {
    if partition.total_modes() != m {
        return Err(Error::InvalidPartition(format!(
            "partition lives on {} modes, interferometer has {m}",
            partition.total_modes()
        )));
    }
    let mut bins = partition.bins().to_vec();
    bins.push((m..2 * m).collect());
    Partition::from_zero_based(bins, 2 * m)
}

/// Binomial(`trials`, `p`) probabilities.
fn binomial_pmf(trials: usize, p: f64) -> Vec<f64> {
    let mut out = vec![0.0; trials + 1];
    let mut coeff = 1.0f64;
    for (k, slot) in out.iter_mut().enumerate() {
        if k > 0 {
            coeff *= (trials + 1 - k) as f64 / k as f64;
        }
        *slot = coeff * p.powi(k as i32) * (1.0 - p).powi((trials - k) as i32);
    }
    out
}

/// Convolve each axis with the dark-count law of its bin: a bin of
/// `bin_sizes[z]` detectors fires Binomial(`bin_sizes[z]`, `p_d`) spurious
/// counts, independently across bins. Axis `z` grows by `bin_sizes[z]`.
pub fn dark_counts_convolve(dist: &BinnedDistribution, p_d: f64, bin_sizes: &[usize]) -> Result<BinnedDistribution> {
    if !(0.0..1.0).contains(&p_d) {
        return Err(Error::Domain(format!("dark count probability {p_d} outside [0, 1)")));
    }
    if bin_sizes.len() != dist.num_bins() {
        return Err(Error::Shape(format!(
            "{} bin sizes for a distribution with {} bins",
            bin_sizes.len(),
            dist.num_bins()
        )));
    }
    let mut current = dist.clone();
    for (axis, &size) in bin_sizes.iter().enumerate() {
        if size == 0 {
            continue;
        }
        let kernel = binomial_pmf(size, p_d);
        let mut shape = current.shape().to_vec();
        shape[axis] += size;
        let mut next = BinnedDistribution::zeros(dist.n(), shape)?;
        for (k, p) in current.iter() {
            if p == 0.0 {
                continue;
            }
            let mut target = k.clone();
            for (d, q) in kernel.iter().enumerate() {
                target[axis] = k[axis] + d;
                let i = next.index_of(&target).expect("widened axis");
                next.probabilities_mut()[i] += p * q;
            }
        }
        current = next;
    }
    Ok(current)
}
