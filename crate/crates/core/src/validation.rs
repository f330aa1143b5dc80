//! Distances, Bayesian validation and Haar-averaged studies.
//!
//! Total variation distance here is `sum |p - q|`, without the factor 1/2,
//! so it ranges over `[0, 2]`.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::haar_unitary;
use crate::noise::{gram_interpolation, lossy_binned_distribution, GramMatrix};
use crate::partitions::{binned_distribution, equipartition, BinnedDistribution, InputSpec, Method, Partition};
use crate::seed::{child_seed, stream_rng};

/// Default floor on model probabilities inside the Bayes ratio.
pub const DEFAULT_FLOOR: f64 = 1e-12;
/// Default cap on drawn samples.
pub const DEFAULT_MAX_SAMPLES: usize = 100_000;

/// `sum_k |p(k) - q(k)|`, missing outcomes counted as zero.
pub fn tvd(p: &BinnedDistribution, q: &BinnedDistribution) -> Result<f64> {
    if p.num_bins() != q.num_bins() {
        return Err(Error::Shape(format!("distributions have {} and {} bins", p.num_bins(), q.num_bins())));
    }
    let mut total = 0.0;
    for (k, pk) in p.iter() {
        total += (pk - q.prob(&k)).abs();
    }
    for (k, qk) in q.iter() {
        if p.index_of(&k).is_none() {
            total += qk.abs();
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleKind {
    RawOccupations,
    BinnedCounts,
}

/// Experimental records: full occupation vectors (`width = m`) or bin
/// counts (`width = K`).
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    kind: SampleKind,
    width: usize,
    records: Vec<Vec<usize>>,
}

impl SampleSet {
    pub fn new(kind: SampleKind, width: usize, records: Vec<Vec<usize>>) -> Result<Self> {
        if width == 0 {
            return Err(Error::Shape("sample width must be positive".into()));
        }
        if let Some((i, r)) = records.iter().enumerate().find(|(_, r)| r.len() != width) {
            return Err(Error::Ingestion {
                line: i + 1,
                message: format!("record has {} entries, expected {width}", r.len()),
            });
        }
        Ok(Self { kind, width, records })
    }

    pub fn raw(m: usize, records: Vec<Vec<usize>>) -> Result<Self> {
        Self::new(SampleKind::RawOccupations, m, records)
    }

    pub fn binned(k: usize, records: Vec<Vec<usize>>) -> Result<Self> {
        Self::new(SampleKind::BinnedCounts, k, records)
    }

    pub fn kind(&self) -> SampleKind {
        self.kind
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn records(&self) -> &[Vec<usize>] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// `k_z = sum_{j in bin z} s_j` for every raw record.
pub fn bin_samples(samples: &SampleSet, partition: &Partition) -> Result<SampleSet> {
    if samples.kind != SampleKind::RawOccupations {
        return Err(Error::Shape("samples are already binned".into()));
    }
    if samples.width != partition.total_modes() {
        return Err(Error::Shape(format!(
            "samples have {} modes, partition {}",
            samples.width,
            partition.total_modes()
        )));
    }
    let records = samples
        .records
        .iter()
        .map(|s| partition.bins().iter().map(|b| b.iter().map(|&j| s[j]).sum()).collect())
        .collect();
    SampleSet::binned(partition.num_bins(), records)
}

/// `chi / (chi + 1)` from `ln chi`, stable for any magnitude.
pub fn p_null_from_log_chi(log_chi: f64) -> f64 {
    if log_chi >= 0.0 {
        1.0 / (1.0 + (-log_chi).exp())
    } else {
        let e = log_chi.exp();
        e / (1.0 + e)
    }
}

/// Per-outcome log likelihood ratios `ln P0(k) - ln Pa(k)` with floored
/// probabilities.
#[derive(Debug, Clone)]
pub struct BayesModel<'a> {
    p0: &'a BinnedDistribution,
    pa: &'a BinnedDistribution,
    floor: f64,
}

impl<'a> BayesModel<'a> {
    pub fn new(p0: &'a BinnedDistribution, pa: &'a BinnedDistribution, floor: f64) -> Result<Self> {
        if !(floor > 0.0) || floor >= 1.0 {
            return Err(Error::Domain(format!("floor must lie in (0, 1), got {floor}")));
        }
        if p0.num_bins() != pa.num_bins() {
            return Err(Error::Shape("null and alternative have different K".into()));
        }
        Ok(Self { p0, pa, floor })
    }

    pub fn log_ratio(&self, k: &[usize]) -> f64 {
        self.p0.prob(k).max(self.floor).ln() - self.pa.prob(k).max(self.floor).ln()
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }
}

/// Outcome of a Bayesian comparison of `H0` (null) against `Ha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// Bayes factor; saturates at `f64::MAX`.
    pub chi: f64,
    pub log_chi: f64,
    pub p_null: f64,
    pub samples_used: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    pub censored: bool,
    pub floor: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ValidationReport {
    fn from_log_chi(log_chi: f64, samples_used: usize, floor: f64) -> Self {
        Self {
            chi: log_chi.exp().min(f64::MAX),
            log_chi,
            p_null: p_null_from_log_chi(log_chi),
            samples_used,
            threshold: None,
            censored: false,
            floor,
            seed: None,
        }
    }
}

fn check_binned(samples: &SampleSet, k: usize) -> Result<()> {
    if samples.kind != SampleKind::BinnedCounts {
        return Err(Error::Shape("Bayes update needs binned samples".into()));
    }
    if samples.width != k {
        return Err(Error::Shape(format!("samples have {} bins, models {k}", samples.width)));
    }
    Ok(())
}

/// `chi = prod_i P0(k_i) / Pa(k_i)` over all samples.
pub fn bayes_update(
    samples: &SampleSet,
    p0: &BinnedDistribution,
    pa: &BinnedDistribution,
    floor: f64,
) -> Result<ValidationReport> {
    let model = BayesModel::new(p0, pa, floor)?;
    check_binned(samples, p0.num_bins())?;
    // an empty f64 sum is -0.0
    let log_chi: f64 = samples.records.iter().map(|k| model.log_ratio(k)).sum::<f64>() + 0.0;
    Ok(ValidationReport::from_log_chi(log_chi, samples.len(), floor))
}

/// `p_null` after each sample.
pub fn running_p_null(
    samples: &SampleSet,
    p0: &BinnedDistribution,
    pa: &BinnedDistribution,
    floor: f64,
) -> Result<Vec<f64>> {
    let model = BayesModel::new(p0, pa, floor)?;
    check_binned(samples, p0.num_bins())?;
    let mut log_chi = 0.0;
    Ok(samples
        .records
        .iter()
        .map(|k| {
            log_chi += model.log_ratio(k);
            p_null_from_log_chi(log_chi)
        })
        .collect())
}

/// Whether `p_null` has crossed `threshold`: from above for a threshold
/// below 1/2 (rejecting `H0`), from below otherwise (confirming it).
pub fn crossed(p_null: f64, threshold: f64) -> bool {
    if threshold < 0.5 {
        p_null < threshold
    } else {
        p_null > threshold
    }
}

/// Draw from `truth` until `p_null` crosses `threshold` or `max_samples`
/// draws are used. The draws are those of `oracle::sample_binned(truth, _, seed)`.
pub fn samples_to_decision(
    truth: &BinnedDistribution,
    p0: &BinnedDistribution,
    pa: &BinnedDistribution,
    threshold: f64,
    max_samples: usize,
    seed: u64,
    floor: f64,
) -> Result<ValidationReport> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Domain(format!("threshold must lie in (0, 1), got {threshold}")));
    }
    let model = BayesModel::new(p0, pa, floor)?;
    if truth.num_bins() != p0.num_bins() {
        return Err(Error::Shape("truth and models have different K".into()));
    }
    let ratios: Vec<f64> = (0..truth.len()).map(|i| model.log_ratio(&truth.counts_of(i))).collect();
    let index = sampler(truth)?;
    let mut rng = stream_rng(seed, 0);
    let mut log_chi = 0.0;
    let mut used = 0;
    let mut done = false;
    while used < max_samples {
        log_chi += ratios[index.sample(&mut rng)];
        used += 1;
        if crossed(p_null_from_log_chi(log_chi), threshold) {
            done = true;
            break;
        }
    }
    let mut report = ValidationReport::from_log_chi(log_chi, used, floor);
    report.threshold = Some(threshold);
    report.censored = !done;
    report.seed = Some(seed);
    Ok(report)
}

fn sampler(dist: &BinnedDistribution) -> Result<WeightedIndex<f64>> {
    let weights: Vec<f64> = dist.probabilities().iter().map(|&p| p.max(0.0)).collect();
    WeightedIndex::new(&weights).map_err(|e| Error::Domain(format!("cannot sample from distribution: {e}")))
}

/// Mean, sample standard deviation and raw values of a study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub values: Vec<f64>,
}

impl Summary {
    pub fn of(values: Vec<f64>) -> Self {
        let n = values.len() as f64;
        let mean = if values.is_empty() { f64::NAN } else { values.iter().sum::<f64>() / n };
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Self { mean, std, values }
    }
}

/// Median of the finite values (average of the two middle ones when even).
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let h = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[h] } else { (v[h - 1] + v[h]) / 2.0 })
}

/// TVD between the binned distributions of two photon sources, one Haar
/// unitary per trial (`haar_unitary(m, child_seed(seed, trial))`), bins from
/// `equipartition(m, k)`, photons in the first `n` inputs.
pub fn haar_tvd_study(
    n: usize,
    m: usize,
    k: usize,
    gram_a: &GramMatrix,
    gram_b: &GramMatrix,
    trials: usize,
    seed: u64,
) -> Result<Summary> {
    if gram_a.dim() != n || gram_b.dim() != n {
        return Err(Error::Shape(format!("Gram matrices must be {n}x{n}")));
    }
    let partition = equipartition(m, k)?;
    let input_a = InputSpec::standard(m, gram_a.clone())?;
    let input_b = InputSpec::standard(m, gram_b.clone())?;
    let values = (0..trials)
        .into_par_iter()
        .map(|t| {
            let u = haar_unitary(m, child_seed(seed, t as u64))?;
            let a = binned_distribution(&u, &input_a, &partition, &Method::Ryser)?;
            let b = binned_distribution(&u, &input_b, &partition, &Method::Ryser)?;
            tvd(&a, &b)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(Summary::of(values))
}

/// `value = c rho^r`, fitted by least squares on logarithms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub prefactor: f64,
    pub exponent: f64,
    /// `ln value - ln(c rho^r)` per point.
    pub residuals: Vec<f64>,
}

pub fn powerlaw_fit(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 3 {
        return Err(Error::Domain("power-law fit needs at least 3 points".into()));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0) || !(y > 0.0)) {
        return Err(Error::Domain("power-law fit needs positive abscissae and values".into()));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("power-law fit needs distinct abscissae".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let residuals = xs.iter().zip(&ys).map(|(x, y)| y - intercept - exponent * x).collect();
    Ok(PowerLawFit { prefactor: intercept.exp(), exponent, residuals })
}

/// Samples needed to reject (or confirm) `H0`, one run per Haar unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleCountStudy {
    /// Samples used per trial, censored runs included at `max_samples`.
    pub samples: Vec<usize>,
    pub censored: Vec<bool>,
}

impl SampleCountStudy {
    /// Median over uncensored runs.
    pub fn median(&self) -> Option<f64> {
        let v: Vec<f64> =
            self.samples.iter().zip(&self.censored).filter(|(_, &c)| !c).map(|(&s, _)| s as f64).collect();
        median(&v)
    }

    /// Mean and standard deviation over uncensored runs.
    pub fn summary(&self) -> Summary {
        Summary::of(self.samples.iter().zip(&self.censored).filter(|(_, &c)| !c).map(|(&s, _)| s as f64).collect())
    }

    pub fn censored_count(&self) -> usize {
        self.censored.iter().filter(|&&c| c).count()
    }
}

/// Parameters of [`sample_count_study`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampleCountParams {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    /// Distinguishability of the null hypothesis (usually 1).
    pub x_null: f64,
    /// Distinguishability of the alternative, which also generates the data.
    pub x_alt: f64,
    pub threshold: f64,
    pub max_samples: usize,
    pub floor: f64,
    pub trials: usize,
    pub seed: u64,
}

/// For trial `t`: `haar_unitary(m, child_seed(child_seed(seed, t), 0))`, data
/// drawn with seed `child_seed(child_seed(seed, t), 1)`.
pub fn sample_count_study(p: &SampleCountParams) -> Result<SampleCountStudy> {
    let partition = equipartition(p.m, p.k)?;
    let null = InputSpec::standard(p.m, gram_interpolation(p.n, p.x_null)?)?;
    let alt = InputSpec::standard(p.m, gram_interpolation(p.n, p.x_alt)?)?;
    let runs = (0..p.trials)
        .into_par_iter()
        .map(|t| {
            let trial_seed = child_seed(p.seed, t as u64);
            let u = haar_unitary(p.m, child_seed(trial_seed, 0))?;
            let p0 = binned_distribution(&u, &null, &partition, &Method::Ryser)?;
            let pa = binned_distribution(&u, &alt, &partition, &Method::Ryser)?;
            let r = samples_to_decision(&pa, &p0, &pa, p.threshold, p.max_samples, child_seed(trial_seed, 1), p.floor)?;
            Ok((r.samples_used, r.censored))
        })
        .collect::<Result<Vec<_>>>()?;
    let (samples, censored) = runs.into_iter().unzip();
    Ok(SampleCountStudy { samples, censored })
}

/// Parameters of [`loss_speedup_study`].
#[derive(Debug, Clone, PartialEq)]
pub struct LossSpeedupParams {
    pub n: usize,
    pub m: usize,
    pub x_alt: f64,
    pub transmissivity: f64,
    pub l_max: usize,
    pub trials: usize,
    pub runs_per_trial: usize,
    pub threshold: f64,
    pub max_samples: usize,
    pub floor: f64,
    pub seed: u64,
}

/// Validation times with events of up to `l` lost photons kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossSpeedup {
    /// `T_0 / T_l` for `l = 0..=l_max`.
    pub ratios: Vec<f64>,
    /// `T_l`: mean number of shots drawn, discarded ones included.
    pub mean_times: Vec<f64>,
    /// Standard deviation of the per-run times.
    pub std_times: Vec<f64>,
    /// Runs that hit `max_samples` before deciding, per `l`.
    pub censored: Vec<usize>,
    pub runs: usize,
}

/// One bin holding the first `ceil(m/2)` output modes, plus the lost photons.
/// Data come from the `x_alt` source and the test rejects `x = 1` at
/// `p_null < threshold`. Every shot costs one time unit whether or not it is
/// kept; censored runs count as `max_samples`.
///
/// Trial `t` uses `haar_unitary(m, child_seed(child_seed(seed, t), 0))`; run
/// `r` of it draws with seed `child_seed(child_seed(seed, t), r + 1)`. All
/// values of `l` score the same stream of shots.
pub fn loss_speedup_study(p: &LossSpeedupParams) -> Result<LossSpeedup> {
    if p.l_max > p.n {
        return Err(Error::Domain(format!("l_max = {} exceeds n = {}", p.l_max, p.n)));
    }
    if !(p.threshold > 0.0 && p.threshold < 0.5) {
        return Err(Error::Domain("loss study rejects H0: threshold must lie in (0, 0.5)".into()));
    }
    let partition = Partition::from_zero_based(vec![(0..p.m.div_ceil(2)).collect()], p.m)?;
    let null = InputSpec::standard(p.m, gram_interpolation(p.n, 1.0)?)?;
    let alt = InputSpec::standard(p.m, gram_interpolation(p.n, p.x_alt)?)?;
    let levels = p.l_max + 1;
    let per_trial = (0..p.trials)
        .into_par_iter()
        .map(|t| {
            let trial_seed = child_seed(p.seed, t as u64);
            let u = haar_unitary(p.m, child_seed(trial_seed, 0))?;
            let p0 = lossy_binned_distribution(&u, &null, &partition, p.transmissivity, &Method::Ryser)?;
            let pa = lossy_binned_distribution(&u, &alt, &partition, p.transmissivity, &Method::Ryser)?;
            let model = BayesModel::new(&p0, &pa, p.floor)?;
            let ratios: Vec<f64> = (0..pa.len()).map(|i| model.log_ratio(&pa.counts_of(i))).collect();
            let lost: Vec<usize> = (0..pa.len()).map(|i| pa.counts_of(i)[1]).collect();
            let index = sampler(&pa)?;
            let mut times = vec![0.0; levels];
            let mut squares = vec![0.0; levels];
            let mut censored = vec![0usize; levels];
            for r in 0..p.runs_per_trial {
                let mut rng = stream_rng(child_seed(trial_seed, r as u64 + 1), 0);
                let mut log_chi = vec![0.0; levels];
                let mut decided: Vec<Option<usize>> = vec![None; levels];
                let mut open = levels;
                let mut drawn = 0;
                while open > 0 && drawn < p.max_samples {
                    let i = index.sample(&mut rng);
                    drawn += 1;
                    for l in lost[i]..levels {
                        if decided[l].is_none() {
                            log_chi[l] += ratios[i];
                            if crossed(p_null_from_log_chi(log_chi[l]), p.threshold) {
                                decided[l] = Some(drawn);
                                open -= 1;
                            }
                        }
                    }
                }
                for l in 0..levels {
                    let d = match decided[l] {
                        Some(d) => d as f64,
                        None => {
                            censored[l] += 1;
                            p.max_samples as f64
                        }
                    };
                    times[l] += d;
                    squares[l] += d * d;
                }
            }
            Ok((times, squares, censored))
        })
        .collect::<Result<Vec<_>>>()?;
    let runs = p.trials * p.runs_per_trial;
    let mut mean_times = vec![0.0; levels];
    let mut second = vec![0.0; levels];
    let mut censored = vec![0; levels];
    for (times, squares, cens) in per_trial {
        for l in 0..levels {
            mean_times[l] += times[l];
            second[l] += squares[l];
            censored[l] += cens[l];
        }
    }
    let total = runs as f64;
    let std_times = (0..levels)
        .map(|l| {
            if runs < 2 {
                return 0.0;
            }
            let var = (second[l] - mean_times[l] * mean_times[l] / total) / (total - 1.0);
            var.max(0.0).sqrt()
        })
        .collect();
    for t in mean_times.iter_mut() {
        *t /= total;
    }
    let ratios = mean_times.iter().map(|t| mean_times[0] / t).collect();
    Ok(LossSpeedup { ratios, mean_times, std_times, censored, runs })
}
