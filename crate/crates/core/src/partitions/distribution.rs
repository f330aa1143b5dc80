use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probability law over photon-count vectors `k`, one axis per bin.
///
/// Stored densely in row-major order (axis 0 slowest). Axis `z` holds counts
/// `0..shape[z]`; for a plain binned distribution every axis has `n + 1`
/// entries, dark-count convolution widens individual axes.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedDistribution {
    n: usize,
    shape: Vec<usize>,
    probs: Vec<f64>,
}

impl BinnedDistribution {
    pub fn new(n: usize, shape: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::Shape(format!("invalid distribution shape {shape:?}")));
        }
        let len: usize = shape.iter().product();
        if len != probs.len() {
            return Err(Error::Shape(format!("shape {shape:?} needs {len} entries, got {}", probs.len())));
        }
        Ok(Self { n, shape, probs })
    }

    /// All `K` axes sized `n + 1`.
    pub fn cube(n: usize, k: usize, probs: Vec<f64>) -> Result<Self> {
        Self::new(n, vec![n + 1; k], probs)
    }

    pub fn zeros(n: usize, shape: Vec<usize>) -> Result<Self> {
        let len = shape.iter().product();
        Self::new(n, shape, vec![0.0; len])
    }

    /// Photon number of the underlying experiment.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of bins `K` (axes).
    pub fn num_bins(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn probabilities_mut(&mut self) -> &mut [f64] {
        &mut self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn index_of(&self, k: &[usize]) -> Option<usize> {
        if k.len() != self.shape.len() {
            return None;
        }
        let mut idx = 0;
        for (&kz, &s) in k.iter().zip(&self.shape) {
            if kz >= s {
                return None;
            }
            idx = idx * s + kz;
        }
        Some(idx)
    }

    pub fn counts_of(&self, mut idx: usize) -> Vec<usize> {
        let mut k = vec![0; self.shape.len()];
        for z in (0..self.shape.len()).rev() {
            k[z] = idx % self.shape[z];
            idx /= self.shape[z];
        }
        k
    }

    /// `P(k)`, zero outside the stored domain.
    pub fn prob(&self, k: &[usize]) -> f64 {
        self.index_of(k).map_or(0.0, |i| self.probs[i])
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// `(k, P(k))` over the whole stored domain.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        self.probs.iter().enumerate().map(|(i, &p)| (self.counts_of(i), p))
    }

    /// Distribution of the count in one bin.
    pub fn axis_marginal(&self, axis: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.shape[axis]];
        for (i, &p) in self.probs.iter().enumerate() {
            out[self.counts_of(i)[axis]] += p;
        }
        out
    }

    /// Keep only the listed axes, in the listed order.
    pub fn marginalize(&self, keep: &[usize]) -> Result<BinnedDistribution> {
        if keep.is_empty() || keep.iter().any(|&a| a >= self.shape.len()) {
            return Err(Error::Shape(format!("bad marginal axes {keep:?}")));
        }
        let shape: Vec<usize> = keep.iter().map(|&a| self.shape[a]).collect();
        let mut out = BinnedDistribution::zeros(self.n, shape)?;
        for (i, &p) in self.probs.iter().enumerate() {
            let k = self.counts_of(i);
            let kk: Vec<usize> = keep.iter().map(|&a| k[a]).collect();
            let j = out.index_of(&kk).expect("marginal index in range");
            out.probs[j] += p;
        }
        Ok(out)
    }

    /// Expected count in one bin.
    pub fn mean(&self, axis: usize) -> f64 {
        self.axis_marginal(axis).iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    /// Total probability on outcomes whose counts do not add up to `total`.
    pub fn mass_off_total(&self, total: usize) -> f64 {
        self.iter().filter(|(k, _)| k.iter().sum::<usize>() != total).map(|(_, p)| p.abs()).sum()
    }

    /// Permute axes: axis `z` of the result is axis `order[z]` of `self`.
    pub fn permute_axes(&self, order: &[usize]) -> Result<BinnedDistribution> {
        let mut seen = vec![false; self.shape.len()];
        if order.len() != self.shape.len() {
            return Err(Error::Shape("axis permutation has wrong length".into()));
        }
        for &a in order {
            if a >= seen.len() || seen[a] {
                return Err(Error::Shape(format!("{order:?} is not a permutation")));
            }
            seen[a] = true;
        }
        self.marginalize(order)
    }
}

/// Method metadata attached to a computed distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodInfo {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials_per_point: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Sum of the estimated probabilities before clipping and rescaling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_total: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub renormalized: Option<bool>,
}

impl MethodInfo {
    pub fn exact() -> Self {
        Self::named("ryser")
    }

    pub fn named(kind: &str) -> Self {
        Self {
            kind: kind.to_string(),
            beta: None,
            epsilon: None,
            trials_per_point: None,
            seed: None,
            raw_total: None,
            renormalized: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbabilityEntry {
    pub k: Vec<usize>,
    pub p: f64,
}

/// JSON form of a distribution:
/// `{"n", "K", "bins": [[modes..]..], "probabilities": [{"k", "p"}..], "method": {..}}`.
///
/// Modes in `bins` are 1-based. Every stored outcome is listed, zeros
/// included, so the axis sizes can be recovered on reading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionDoc {
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub bins: Vec<Vec<usize>>,
    pub probabilities: Vec<ProbabilityEntry>,
    pub method: MethodInfo,
}

impl DistributionDoc {
    pub fn new(dist: &BinnedDistribution, bins: Vec<Vec<usize>>, method: MethodInfo) -> Self {
        Self {
            n: dist.n(),
            k: dist.num_bins(),
            bins,
            probabilities: dist.iter().map(|(k, p)| ProbabilityEntry { k, p }).collect(),
            method,
        }
    }

    pub fn to_distribution(&self) -> Result<BinnedDistribution> {
        if self.k == 0 {
            return Err(Error::Shape("distribution needs K >= 1".into()));
        }
        let mut shape = vec![0usize; self.k];
        for e in &self.probabilities {
            if e.k.len() != self.k {
                return Err(Error::Shape(format!("entry {:?} does not have K={} counts", e.k, self.k)));
            }
            for (s, &kz) in shape.iter_mut().zip(&e.k) {
                *s = (*s).max(kz + 1);
            }
        }
        let mut dist = BinnedDistribution::zeros(self.n, shape)?;
        for e in &self.probabilities {
            let i = dist.index_of(&e.k).expect("shape covers entry");
            dist.probs[i] = e.p;
        }
        Ok(dist)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip() {
        let d = BinnedDistribution::zeros(3, vec![4, 2, 3]).unwrap();
        for i in 0..d.len() {
            assert_eq!(d.index_of(&d.counts_of(i)), Some(i));
        }
        assert_eq!(d.index_of(&[4, 0, 0]), None);
        assert_eq!(d.index_of(&[0, 0]), None);
    }

    #[test]
    fn marginals_and_permutation() {
        // P(k1, k2) on a 2x3 grid
        let d = BinnedDistribution::new(2, vec![2, 3], vec![0.1, 0.2, 0.0, 0.3, 0.0, 0.4]).unwrap();
        assert_eq!(d.axis_marginal(0), vec![0.30000000000000004, 0.7]);
        let t = d.permute_axes(&[1, 0]).unwrap();
        assert_eq!(t.shape(), &[3, 2]);
        assert_eq!(t.prob(&[2, 1]), 0.4);
        assert_eq!(t.prob(&[1, 0]), 0.2);
        assert!(d.permute_axes(&[0, 0]).is_err());
    }

    #[test]
    fn doc_round_trip() {
        let d = BinnedDistribution::new(1, vec![2, 3], vec![0.1, 0.2, 0.0, 0.3, 0.0, 0.4]).unwrap();
        let doc = DistributionDoc::new(&d, vec![vec![1], vec![2, 3]], MethodInfo::exact());
        let text = serde_json::to_string(&doc).unwrap();
        let back: DistributionDoc = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_distribution().unwrap(), d);
        assert!(text.contains("\"K\":2"));
    }
}
