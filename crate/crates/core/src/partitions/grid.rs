use rayon::prelude::*;

use super::{check_dims, InputSpec, InversionDiagnostics, Method, Partition, PhaseVector};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, UnitaryMatrix, C64};
use crate::permanent::{glynn_mean, glynn_trials, perm_ryser};
use crate::seed::child_seed;

/// `x(eta)` for a fixed interferometer, input and partition.
///
/// The photon-indexed matrix `V_n(eta)` is linear in the bin phases:
/// `V_n = G_rest + sum_z exp(i eta_z) G_z` with
/// `G_z[p][q] = sum_{k in bin z} conj(U[d_p][k]) U[d_q][k]`, so each grid point
/// costs `O(K n^2)` plus one `n x n` permanent.
#[derive(Debug, Clone)]
pub struct CharacteristicFunction {
    n: usize,
    blocks: Vec<ComplexMatrix>,
    rest: ComplexMatrix,
    gram: ComplexMatrix,
    norm: f64,
}

impl CharacteristicFunction {
    pub fn new(u: &UnitaryMatrix, input: &InputSpec, partition: &Partition) -> Result<Self> {
        check_dims(u, partition)?;
        if input.num_modes() != u.dim() {
            return Err(Error::Shape(format!("input has {} modes, interferometer has {}", input.num_modes(), u.dim())));
        }
        let n = input.n();
        let d = input.mode_assignment();
        let um = u.matrix();
        let block = |modes: &mut dyn Iterator<Item = usize>| {
            let mut g = ComplexMatrix::zeros(n, n);
            for k in modes {
                for p in 0..n {
                    let a = um[(d[p], k)].conj();
                    for q in 0..n {
                        g[(p, q)] += a * um[(d[q], k)];
                    }
                }
            }
            g
        };
        let blocks = partition.bins().iter().map(|b| block(&mut b.iter().copied())).collect();
        let owner = partition.bin_of_mode();
        let rest = block(&mut (0..u.dim()).filter(|&k| owner[k].is_none()));
        Ok(Self { n, blocks, rest, gram: input.gram().matrix().clone(), norm: input.state_norm() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_bins(&self) -> usize {
        self.blocks.len()
    }

    /// `V_n(eta)`: the photon-indexed virtual interferometer.
    pub fn reduced_interferometer(&self, eta: &PhaseVector) -> Result<ComplexMatrix> {
        if eta.len() != self.blocks.len() {
            return Err(Error::Shape(format!(
                "phase vector has {} entries, partition has {} bins",
                eta.len(),
                self.blocks.len()
            )));
        }
        Ok(self.combine(eta.0.iter().map(|&phase| C64::from_polar(1.0, phase))))
    }

    fn combine(&self, phases: impl Iterator<Item = C64>) -> ComplexMatrix {
        let mut v = self.rest.clone();
        for (g, f) in self.blocks.iter().zip(phases) {
            v.zip_apply(g, |a, b| *a += f * b);
        }
        v
    }

    fn value_of(&self, v: ComplexMatrix, method: &Method, stream: u64) -> Result<C64> {
        let a = v.component_mul(&self.gram);
        let perm = match *method {
            Method::Ryser => perm_ryser(&a)?,
            Method::Glynn { epsilon, seed } => {
                if !(epsilon > 0.0) || !epsilon.is_finite() {
                    return Err(Error::Domain(format!("epsilon must be > 0, got {epsilon}")));
                }
                glynn_mean(&a, glynn_trials(epsilon), child_seed(seed, stream))
            }
        };
        Ok(perm / self.norm)
    }

    /// `x(eta)`. Glynn estimates use stream 0 of the method seed.
    pub fn value(&self, eta: &PhaseVector, method: &Method) -> Result<C64> {
        let v = self.reduced_interferometer(eta)?;
        self.value_of(v, method, 0)
    }

    /// `x` on the full grid `{2 pi l / (n + 1)}^K`.
    ///
    /// Only one point of each pair `l`, `-l mod (n + 1)` is evaluated, the
    /// other is its conjugate. `l = 0` is set to exactly 1. Grid point with
    /// flat index `i` draws its Glynn trials from `child_seed(seed, i)`.
    pub fn grid(&self, method: &Method) -> Result<CharacteristicGrid> {
        let side = self.n + 1;
        let k = self.blocks.len();
        let len = side
            .checked_pow(k as u32)
            .filter(|&l| l <= 1 << 26)
            .ok_or_else(|| Error::TooLarge(format!("grid of {side}^{k} points")))?;
        let twiddle: Vec<C64> =
            (0..side).map(|j| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / side as f64)).collect();
        let mirror = |idx: usize| -> usize {
            let mut rem = idx;
            let mut out = 0;
            let mut scale = 1;
            for _ in 0..k {
                let l = rem % side;
                rem /= side;
                out += ((side - l) % side) * scale;
                scale *= side;
            }
            out
        };
        let reps: Vec<usize> = (1..len).filter(|&i| i <= mirror(i)).collect();
        let computed: Vec<(usize, C64)> = reps
            .par_iter()
            .map(|&idx| {
                let mut rem = idx;
                let mut l = vec![0; k];
                for z in (0..k).rev() {
                    l[z] = rem % side;
                    rem /= side;
                }
                let v = self.combine(l.iter().map(|&lz| twiddle[lz]));
                self.value_of(v, method, idx as u64).map(|x| (idx, x))
            })
            .collect::<Result<_>>()?;
        let mut values = vec![C64::new(0.0, 0.0); len];
        values[0] = C64::new(1.0, 0.0);
        for (idx, x) in computed {
            let j = mirror(idx);
            if j == idx {
                values[idx] = C64::new(x.re, 0.0);
            } else {
                values[idx] = x;
                values[j] = x.conj();
            }
        }
        Ok(CharacteristicGrid { n: self.n, k, values })
    }
}

/// Characteristic function sampled on the `(n + 1)^K` grid, row-major with
/// axis 0 slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicGrid {
    pub n: usize,
    pub k: usize,
    pub values: Vec<C64>,
}

impl CharacteristicGrid {
    /// `P(k) = (n+1)^-K sum_l x(nu_l) exp(-i nu_l . k)`, one axis at a time.
    pub fn invert(&self) -> (Vec<f64>, InversionDiagnostics) {
        let side = self.n + 1;
        let twiddle: Vec<C64> =
            (0..side).map(|j| C64::from_polar(1.0, -2.0 * std::f64::consts::PI * j as f64 / side as f64)).collect();
        let mut data = self.values.clone();
        let mut buf = vec![C64::new(0.0, 0.0); side];
        let mut stride = 1;
        for _ in 0..self.k {
            let block = stride * side;
            for outer in (0..data.len()).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for (kk, out) in buf.iter_mut().enumerate() {
                        let mut acc = C64::new(0.0, 0.0);
                        for l in 0..side {
                            acc += data[base + l * stride] * twiddle[(l * kk) % side];
                        }
                        *out = acc;
                    }
                    for (kk, &v) in buf.iter().enumerate() {
                        data[base + kk * stride] = v;
                    }
                }
            }
            stride = block;
        }
        let scale = 1.0 / data.len() as f64;
        let mut min_raw = f64::INFINITY;
        let mut max_imag: f64 = 0.0;
        let mut raw_total = 0.0;
        let probs = data
            .iter()
            .map(|z| {
                let p = z.re * scale;
                min_raw = min_raw.min(p);
                max_imag = max_imag.max((z.im * scale).abs());
                raw_total += p;
                p
            })
            .collect();
        (probs, InversionDiagnostics { min_raw, max_imag, raw_total })
    }
}
