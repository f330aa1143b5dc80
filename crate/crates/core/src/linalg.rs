//! Interferometer matrices.
//!
//! Convention used throughout the crate: entry `(j, k)` of an interferometer
//! matrix is the amplitude for a photon entering input mode `j` to leave
//! through output mode `k` (rows are inputs, columns are outputs). Indices
//! are 0-based inside the library; files and the CLI use 1-based modes.

use std::path::Path;

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::stream_rng;

pub type C64 = nalgebra::Complex<f64>;

/// General complex matrix (no unitarity guarantee).
pub type ComplexMatrix = DMatrix<C64>;

/// Absolute tolerance of the unitarity check.
pub const UNITARITY_TOL: f64 = 1e-10;

/// A square unitary matrix, checked on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix(ComplexMatrix);

impl UnitaryMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if matrix.nrows() == 0 {
            return Err(Error::InvalidDimension("unitary must have dim >= 1".into()));
        }
        if !matrix.is_square() {
            return Err(Error::Shape(format!("unitary must be square, got {}x{}", matrix.nrows(), matrix.ncols())));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidUnitary("non-finite entry".into()));
        }
        let err = unitarity_error(&matrix);
        if err >= UNITARITY_TOL {
            return Err(Error::InvalidUnitary(format!("max |U^dag U - 1| = {err:e}")));
        }
        Ok(Self(matrix))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_inner(self) -> ComplexMatrix {
        self.0
    }

    /// Entry for input `row`, output `col` (0-based).
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    pub fn to_file(&self) -> UnitaryFile {
        let m = self.dim();
        UnitaryFile {
            dim: m,
            re: (0..m).map(|r| (0..m).map(|c| self.0[(r, c)].re).collect()).collect(),
            im: (0..m).map(|r| (0..m).map(|c| self.0[(r, c)].im).collect()).collect(),
        }
    }

    pub fn from_file(file: &UnitaryFile) -> Result<Self> {
        Self::new(file.to_matrix()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: UnitaryFile = serde_json::from_str(&text)?;
        Self::from_file(&file)
    }
}

impl AsRef<ComplexMatrix> for UnitaryMatrix {
    fn as_ref(&self) -> &ComplexMatrix {
        &self.0
    }
}

/// On-disk matrix: `{"dim": m, "re": [[..]], "im": [[..]]}`, row-major.
///
/// Row `j`, column `k` of the arrays is the amplitude from input mode `j+1`
/// to output mode `k+1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitaryFile {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl UnitaryFile {
    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        let m = self.dim;
        let rows_ok =
            self.re.len() == m && self.im.len() == m && self.re.iter().chain(self.im.iter()).all(|r| r.len() == m);
        if !rows_ok {
            return Err(Error::Shape(format!("matrix file does not match dim {m}")));
        }
        Ok(ComplexMatrix::from_fn(m, m, |r, c| C64::new(self.re[r][c], self.im[r][c])))
    }
}

/// Largest entry of `|A^dag A - 1|`.
pub fn unitarity_error(a: &ComplexMatrix) -> f64 {
    let prod = a.adjoint() * a;
    let n = prod.nrows();
    let mut worst = 0.0f64;
    for r in 0..n {
        for c in 0..n {
            let target = if r == c { 1.0 } else { 0.0 };
            worst = worst.max((prod[(r, c)] - C64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// Haar-random `m x m` unitary, deterministic in `seed`.
///
/// Ginibre matrix, QR, then each column of Q rescaled by the phase of the
/// matching diagonal entry of R so that R has a positive real diagonal.
pub fn haar_unitary(m: usize, seed: u64) -> Result<UnitaryMatrix> {
    if m == 0 {
        return Err(Error::InvalidDimension("haar_unitary needs m >= 1".into()));
    }
    let mut rng = stream_rng(seed, 0);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let ginibre = ComplexMatrix::from_fn(m, m, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        C64::new(re * scale, im * scale)
    });
    let qr = ginibre.qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..m {
        let d = r[(c, c)];
        let norm = d.norm();
        let phase = if norm > 0.0 { d / norm } else { C64::new(1.0, 0.0) };
        for row in 0..m {
            q[(row, c)] *= phase;
        }
    }
    UnitaryMatrix::new(q)
}

/// Discrete Fourier interferometer, `F[j][k] = exp(-2 pi i j k / m) / sqrt(m)`.
pub fn fourier_matrix(m: usize) -> Result<UnitaryMatrix> {
    if m == 0 {
        return Err(Error::InvalidDimension("fourier_matrix needs m >= 1".into()));
    }
    let norm = 1.0 / (m as f64).sqrt();
    let mf = m as f64;
    let f = ComplexMatrix::from_fn(m, m, |j, k| {
        // reduce j*k mod m first so large m keeps full phase accuracy
        let t = ((j * k) % m) as f64;
        C64::from_polar(norm, -2.0 * std::f64::consts::PI * t / mf)
    });
    UnitaryMatrix::new(f)
}

/// Lossless `2m`-mode embedding of uniform loss in front of `u`.
///
/// Input `i` meets a real beam splitter `[[sqrt t, sqrt(1-t)], [sqrt(1-t), -sqrt t]]`
/// coupling it to environment mode `m + i`; physical modes then go through
/// `u`. Output modes `0..m` are physical, `m..2m` are environment.
pub fn embed_uniform_loss(u: &UnitaryMatrix, transmissivity: f64) -> Result<UnitaryMatrix> {
    if !(0.0..=1.0).contains(&transmissivity) {
        return Err(Error::Domain(format!("transmissivity {transmissivity} outside [0, 1]")));
    }
    let m = u.dim();
    let st = transmissivity.sqrt();
    let sr = (1.0 - transmissivity).sqrt();
    let mut big = ComplexMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        for k in 0..m {
            big[(i, k)] = u.get(i, k) * st;
            big[(m + i, k)] = u.get(i, k) * sr;
        }
        big[(i, m + i)] = C64::new(sr, 0.0);
        big[(m + i, m + i)] = C64::new(-st, 0.0);
    }
    UnitaryMatrix::new(big)
}

/// Largest entry-wise distance between two matrices of equal shape.
pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
