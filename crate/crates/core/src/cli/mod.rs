//! Command-line front end.

mod config;
mod samples;

pub use config::{
    Config, EquipartitionConfig, EquipartitionKind, FourierConfig, FourierKind, MethodConfig, PartitionConfig,
    StudyConfig, SubsetsConfig, UnitaryConfig, ValidationConfig,
};
pub use samples::{read_samples, write_samples, Record, SamplesFile, SamplesHeader};

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::fourier;
use crate::linalg::{UnitaryMatrix, C64};
use crate::noise::{dark_counts_convolve, lossy_binned_distribution_with, GramMatrix, NoiseConfig};
use crate::oracle::{fock_binned_distribution, sample_binned};
use crate::partitions::{
    binned_distribution_with, point_precision, BinnedDistribution, DistributionDoc, InputSpec, Method, MethodInfo,
    Partition,
};
use crate::seed::{child_seed, entropy_seed};
use crate::validation::{
    bayes_update, crossed, haar_tvd_study, loss_speedup_study, running_p_null, sample_count_study, LossSpeedupParams,
    SampleCountParams, SampleKind, SampleSet, ValidationReport, DEFAULT_FLOOR, DEFAULT_MAX_SAMPLES,
};
use config::x_gram;

const DEFAULT_TRIALS: usize = 100;
const DEFAULT_THRESHOLD: f64 = 0.05;
const DEFAULT_SAMPLE_COUNT: usize = 1000;
const DEFAULT_LOSS_MAX_SAMPLES: usize = 1_000_000;
const DEFAULT_RUNS_PER_TRIAL: usize = 10;

#[derive(Debug, Parser)]
#[command(name = "boson-bins", version, about = "Binned photon-number distributions and sample validation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON configuration document.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Samples file for `validate`.
    #[arg(long, global = true)]
    pub samples: Option<PathBuf>,
    /// Output file (default: standard output).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub method: Option<MethodArg>,
    /// Target l1 error of the Glynn estimate.
    #[arg(long, global = true)]
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Ryser,
    Glynn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Binned distribution of the configured model (JSON).
    Dist,
    /// Bayesian test of a samples file: x = 1 against x = x_alt (JSON).
    Validate,
    /// TVD between x = 1 and x over Haar unitaries (CSV).
    Tvd,
    /// Samples needed to reject x = 1 when the data come from x (CSV).
    EstimateSamples,
    /// Validation time when events with up to l lost photons are kept (CSV).
    LossSpeedup,
    /// Closed-form Fourier-interferometer laws (JSON).
    Fourier,
    /// Closed-form Haar averages (JSON).
    HaarAvg,
    /// Fock-space reference computation for n <= 3 (JSON).
    Oracle,
    /// Draw binned samples from the configured model (samples file).
    Sample,
}

/// Exit status for an error.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Numerical(_) => 3,
        Error::Ingestion { .. } => 4,
        _ => 2,
    }
}

/// Machine-readable error line for standard error.
pub fn error_json(err: &Error) -> String {
    let mut doc = serde_json::json!({ "error": err.kind(), "message": err.to_string() });
    if let Error::Ingestion { line, .. } = err {
        doc["line"] = serde_json::json!(line);
    }
    doc.to_string()
}

/// Parse the process arguments, run, and report errors on standard error.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if !e.use_stderr() {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let err = Error::Config(e.to_string().trim_end().to_string());
            eprintln!("{}", error_json(&err));
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", error_json(&err));
            ExitCode::from(exit_code(&err))
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let path = cli.config.as_deref().ok_or_else(|| Error::Config("--config is required".into()))?;
    let config = Config::load(path)?;
    let seed = cli.seed.or(config.seed).unwrap_or_else(entropy_seed);
    let ctx = Context { cli, config, seed };
    let output = match cli.command {
        Command::Dist => ctx.dist()?,
        Command::Validate => ctx.validate()?,
        Command::Tvd => ctx.tvd()?,
        Command::EstimateSamples => ctx.estimate_samples()?,
        Command::LossSpeedup => ctx.loss_speedup()?,
        Command::Fourier => ctx.fourier()?,
        Command::HaarAvg => ctx.haar_avg()?,
        Command::Oracle => ctx.oracle()?,
        Command::Sample => ctx.sample()?,
    };
    emit(cli.out.as_deref(), &output)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            let mut f = File::create(path)?;
            f.write_all(text.as_bytes())?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn json_line<T: serde::Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string(value)? + "\n")
}

/// Seed streams: the Haar unitary and the random draws of one invocation.
const UNITARY_STREAM: u64 = 0;
const DRAW_STREAM: u64 = 1;

struct Context<'a> {
    cli: &'a Cli,
    config: Config,
    seed: u64,
}

/// Ryser, or Glynn with a target l1 error.
enum Solver {
    Ryser,
    Glynn { beta: f64 },
}

impl Context<'_> {
    fn solver(&self) -> Result<Solver> {
        let configured = match self.config.method {
            MethodConfig::Ryser => None,
            MethodConfig::Glynn { beta } => Some(beta),
        };
        let glynn = match self.cli.method {
            Some(MethodArg::Ryser) => false,
            Some(MethodArg::Glynn) => true,
            None => configured.is_some(),
        };
        if !glynn {
            if self.cli.beta.is_some() {
                return Err(Error::Config("--beta requires the glynn method".into()));
            }
            return Ok(Solver::Ryser);
        }
        let beta = self
            .cli
            .beta
            .or(configured)
            .ok_or_else(|| Error::Config("the glynn method needs --beta or method.beta".into()))?;
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::Config(format!("beta must be > 0, got {beta}")));
        }
        Ok(Solver::Glynn { beta })
    }

    fn unitary(&self) -> Result<UnitaryMatrix> {
        self.config.unitary(child_seed(self.seed, UNITARY_STREAM))
    }

    fn draw_seed(&self) -> u64 {
        child_seed(self.seed, DRAW_STREAM)
    }

    fn lossy(&self) -> bool {
        self.config.noise.transmissivity < 1.0
    }

    /// Bins as written to JSON, with the environment bin when lossy.
    fn output_bins(&self, partition: &Partition) -> Vec<Vec<usize>> {
        let mut bins = partition.one_based();
        if self.lossy() {
            let m = self.config.m;
            bins.push((m + 1..=2 * m).collect());
        }
        bins
    }

    /// Distribution of `gram` under the configured loss and dark counts.
    fn model(
        &self,
        u: &UnitaryMatrix,
        partition: &Partition,
        gram: GramMatrix,
        noise: &NoiseConfig,
        solver: &Solver,
    ) -> Result<(BinnedDistribution, MethodInfo)> {
        let input = InputSpec::standard(self.config.m, gram)?;
        let lossy = noise.transmissivity < 1.0;
        let axes = partition.num_bins() + usize::from(lossy);
        let method = match *solver {
            Solver::Ryser => Method::Ryser,
            Solver::Glynn { beta } => {
                Method::Glynn { epsilon: point_precision(beta, self.config.n, axes), seed: self.draw_seed() }
            }
        };
        let mut computed = if lossy {
            lossy_binned_distribution_with(u, &input, partition, noise.transmissivity, &method)?
        } else {
            binned_distribution_with(u, &input, partition, &method)?
        };
        if let Solver::Glynn { beta } = *solver {
            computed.method.beta = Some(beta);
        }
        let mut dist = computed.distribution;
        if noise.dark_count_p > 0.0 {
            let mut sizes = partition.bin_sizes();
            if lossy {
                sizes.push(0);
            }
            dist = dark_counts_convolve(&dist, noise.dark_count_p, &sizes)?;
        }
        Ok((dist, computed.method))
    }

    fn dist(&self) -> Result<String> {
        let u = self.unitary()?;
        let partition = self.config.partition()?;
        let solver = self.solver()?;
        let (dist, method) = self.model(&u, &partition, self.config.gram()?, &self.config.noise, &solver)?;
        json_line(&DistributionDoc::new(&dist, self.output_bins(&partition), method))
    }

    fn hypotheses(&self, u: &UnitaryMatrix, partition: &Partition) -> Result<(BinnedDistribution, BinnedDistribution)> {
        let n = self.config.n;
        let x_alt = self.config.validation().x_alt.unwrap_or(0.0);
        let solver = self.solver()?;
        let (p0, _) = self.model(u, partition, x_gram(n, 1.0)?, &self.config.noise_with_x(1.0)?, &solver)?;
        let (pa, _) = self.model(u, partition, x_gram(n, x_alt)?, &self.config.noise_with_x(x_alt)?, &solver)?;
        Ok((p0, pa))
    }

    /// Bin-count records in the layout of the models.
    fn binned_records(&self, file: &SamplesFile, partition: &Partition) -> Result<Vec<Vec<usize>>> {
        let Some(header) = file.header else {
            return Ok(Vec::new());
        };
        let n = self.config.n;
        let k = partition.num_bins();
        let lossy = self.lossy();
        let dark = self.config.noise.dark_count_p > 0.0;
        let width = header.width().expect("reader checks the header");
        let ingest = |line: usize, message: String| Error::Ingestion { line, message };
        // binned files of a lossy model may carry the lost-photon count
        let append_env = match header.kind {
            SampleKind::RawOccupations => {
                if width != self.config.m {
                    return Err(ingest(
                        file.header_line,
                        format!("samples declare m = {width}, config has m = {}", self.config.m),
                    ));
                }
                lossy
            }
            SampleKind::BinnedCounts => {
                if width == k + 1 && lossy {
                    false
                } else if width == k {
                    lossy
                } else {
                    return Err(ingest(
                        file.header_line,
                        format!("samples declare K = {width}, model has {} bins", k + usize::from(lossy)),
                    ));
                }
            }
        };
        if append_env && dark {
            return Err(Error::Config(
                "lost photons cannot be inferred from detected counts when dark counts are modelled".into(),
            ));
        }
        let mut out = Vec::with_capacity(file.records.len());
        for r in &file.records {
            let mut counts: Vec<usize> = match header.kind {
                SampleKind::RawOccupations => {
                    partition.bins().iter().map(|b| b.iter().map(|&j| r.values[j]).sum()).collect()
                }
                SampleKind::BinnedCounts => r.values.iter().take(k).copied().collect(),
            };
            if append_env {
                let detected: usize = r.values.iter().sum();
                if detected > n {
                    return Err(ingest(r.line, format!("{detected} photons detected, n = {n}")));
                }
                counts.push(n - detected);
            } else if lossy {
                counts.push(r.values[k]);
            }
            out.push(counts);
        }
        Ok(out)
    }

    fn validate(&self) -> Result<String> {
        let path = self.cli.samples.as_deref().ok_or_else(|| Error::Config("--samples is required".into()))?;
        let reader = File::open(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let file = read_samples(BufReader::new(reader))?;
        let u = self.unitary()?;
        let partition = self.config.partition()?;
        let mut records = self.binned_records(&file, &partition)?;
        let v = self.config.validation();
        let floor = v.floor.unwrap_or(DEFAULT_FLOOR);
        if let Some(max) = v.max_samples {
            records.truncate(max);
        }
        let (p0, pa) = self.hypotheses(&u, &partition)?;
        let width = p0.num_bins();
        let mut used = records.len();
        let mut censored = false;
        if let Some(threshold) = v.threshold {
            if !(threshold > 0.0 && threshold < 1.0) {
                return Err(Error::Config(format!("threshold must lie in (0, 1), got {threshold}")));
            }
            let all = SampleSet::binned(width, records.clone())?;
            let trace = running_p_null(&all, &p0, &pa, floor)?;
            match trace.iter().position(|&p| crossed(p, threshold)) {
                Some(i) => used = i + 1,
                None => censored = true,
            }
        }
        records.truncate(used);
        let mut report: ValidationReport = bayes_update(&SampleSet::binned(width, records)?, &p0, &pa, floor)?;
        report.threshold = v.threshold;
        report.censored = censored;
        report.seed = Some(self.seed);
        json_line(&report)
    }

    fn study_grid(&self) -> (Vec<usize>, Vec<f64>, Vec<usize>, usize) {
        let s = self.config.study();
        let ks = s.k_values.unwrap_or_else(|| vec![self.config.num_bins()]);
        let default_x = self.config.validation().x_alt.unwrap_or(0.0);
        let xs = s.x_values.unwrap_or_else(|| vec![default_x]);
        let ms = s.m_values.unwrap_or_else(|| vec![self.config.m]);
        (ks, xs, ms, s.trials.unwrap_or(DEFAULT_TRIALS))
    }

    fn csv_header(&self, columns: &str) -> String {
        format!("# seed={}\n{columns}\n", self.seed)
    }

    fn tvd(&self) -> Result<String> {
        let n = self.config.n;
        let (ks, xs, ms, trials) = self.study_grid();
        let mut out = self.csv_header("K,x,m,rho,mean,std,trials");
        let mut row = 0u64;
        for &k in &ks {
            for &x in &xs {
                for &m in &ms {
                    let s =
                        haar_tvd_study(n, m, k, &x_gram(n, 1.0)?, &x_gram(n, x)?, trials, child_seed(self.seed, row))?;
                    let rho = n as f64 / m as f64;
                    writeln!(out, "{k},{x},{m},{rho},{},{},{trials}", s.mean, s.std).expect("string write");
                    row += 1;
                }
            }
        }
        Ok(out)
    }

    fn estimate_samples(&self) -> Result<String> {
        let n = self.config.n;
        let (ks, xs, ms, trials) = self.study_grid();
        let v = self.config.validation();
        let mut out = self.csv_header("K,x,m,rho,mean,std,median,censored,trials");
        let mut row = 0u64;
        for &k in &ks {
            for &x in &xs {
                for &m in &ms {
                    let study = sample_count_study(&SampleCountParams {
                        n,
                        m,
                        k,
                        x_null: 1.0,
                        x_alt: x,
                        threshold: v.threshold.unwrap_or(DEFAULT_THRESHOLD),
                        max_samples: v.max_samples.unwrap_or(DEFAULT_MAX_SAMPLES),
                        floor: v.floor.unwrap_or(DEFAULT_FLOOR),
                        trials,
                        seed: child_seed(self.seed, row),
                    })?;
                    let s = study.summary();
                    let median = study.median().unwrap_or(f64::NAN);
                    let rho = n as f64 / m as f64;
                    writeln!(
                        out,
                        "{k},{x},{m},{rho},{},{},{median},{},{trials}",
                        s.mean,
                        s.std,
                        study.censored_count()
                    )
                    .expect("string write");
                    row += 1;
                }
            }
        }
        Ok(out)
    }

    fn loss_speedup(&self) -> Result<String> {
        let s = self.config.study();
        let v = self.config.validation();
        let trials = s.trials.unwrap_or(DEFAULT_TRIALS);
        let result = loss_speedup_study(&LossSpeedupParams {
            n: self.config.n,
            m: self.config.m,
            x_alt: v.x_alt.unwrap_or(0.0),
            transmissivity: self.config.noise.transmissivity,
            l_max: s.l_max.unwrap_or(self.config.n),
            trials,
            runs_per_trial: s.runs_per_trial.unwrap_or(DEFAULT_RUNS_PER_TRIAL),
            threshold: v.threshold.unwrap_or(DEFAULT_THRESHOLD),
            max_samples: v.max_samples.unwrap_or(DEFAULT_LOSS_MAX_SAMPLES),
            floor: v.floor.unwrap_or(DEFAULT_FLOOR),
            seed: self.seed,
        })?;
        let mut out = self.csv_header("l,mean,std,trials,ratio,censored");
        for l in 0..result.ratios.len() {
            writeln!(
                out,
                "{l},{},{},{trials},{},{}",
                result.mean_times[l], result.std_times[l], result.ratios[l], result.censored[l]
            )
            .expect("string write");
        }
        Ok(out)
    }

    /// `true` for indistinguishable, `false` for distinguishable photons.
    fn extreme_x(&self) -> Result<bool> {
        match self.config.x() {
            Some(1.0) => Ok(true),
            Some(0.0) => Ok(false),
            _ => Err(Error::Config("closed forms need noise.x equal to 0 or 1".into())),
        }
    }

    fn require_noiseless(&self, what: &str) -> Result<()> {
        if self.lossy() || self.config.noise.dark_count_p > 0.0 {
            return Err(Error::Config(format!("{what} does not model loss or dark counts")));
        }
        Ok(())
    }

    fn fourier(&self) -> Result<String> {
        self.require_noiseless("fourier")?;
        let bosonic = self.extreme_x()?;
        let kind = self
            .config
            .fourier
            .as_ref()
            .map(|f| f.kind)
            .ok_or_else(|| Error::Config("fourier needs a \"fourier\": {\"kind\": ..} section".into()))?;
        let (n, m) = (self.config.n, self.config.m);
        let (dist, bins) = match kind {
            FourierKind::SingleMode => {
                let d = if bosonic {
                    fourier::single_mode_bosonic(n, m)?
                } else {
                    fourier::single_mode_distinguishable(n, m)?
                };
                (d, vec![vec![1]])
            }
            FourierKind::OddModes => {
                if m != n {
                    return Err(Error::Config(format!("odd_modes needs m = n, got n={n}, m={m}")));
                }
                let d = if bosonic { fourier::odd_modes_bosonic(n)? } else { fourier::odd_modes_distinguishable(n)? };
                (d, vec![(1..=m).step_by(2).collect()])
            }
        };
        json_line(&DistributionDoc::new(&dist, bins, MethodInfo::named("closed_form")))
    }

    fn haar_avg(&self) -> Result<String> {
        self.require_noiseless("haar-avg")?;
        let bosonic = self.extreme_x()?;
        let partition = self.config.partition()?;
        if !partition.spans_all_modes() {
            return Err(Error::Config("haar-avg needs bins covering every output mode".into()));
        }
        let (n, m) = (self.config.n, self.config.m);
        let sizes = partition.bin_sizes();
        let dist = if bosonic {
            fourier::haar_average_bosonic(n, &sizes, m)?
        } else {
            fourier::haar_average_distinguishable(n, &sizes, m)?
        };
        json_line(&DistributionDoc::new(&dist, partition.one_based(), MethodInfo::named("haar_average")))
    }

    fn oracle(&self) -> Result<String> {
        self.require_noiseless("oracle")?;
        let u = self.unitary()?;
        let partition = self.config.partition()?;
        let states = internal_states(&self.config.gram()?);
        let dist = fock_binned_distribution(&u, &states, &partition)?;
        json_line(&DistributionDoc::new(&dist, partition.one_based(), MethodInfo::named("fock_oracle")))
    }

    fn sample(&self) -> Result<String> {
        let u = self.unitary()?;
        let partition = self.config.partition()?;
        let solver = self.solver()?;
        let (dist, _) = self.model(&u, &partition, self.config.gram()?, &self.config.noise, &solver)?;
        let count = self.config.study().sample_count.unwrap_or(DEFAULT_SAMPLE_COUNT);
        let records = sample_binned(&dist, count, self.draw_seed())?;
        let mut buf = Vec::new();
        write_samples(&mut buf, &SamplesHeader::binned(dist.num_bins()), &records)?;
        String::from_utf8(buf).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Internal states with the given Gram matrix: `S = W diag(l) W^dagger`
/// gives `psi_j[e] = sqrt(l_e) conj(W[j][e])`.
fn internal_states(gram: &GramMatrix) -> Vec<DVector<C64>> {
    let eig = gram.matrix().clone().symmetric_eigen();
    let n = gram.dim();
    (0..n)
        .map(|j| {
            DVector::from_fn(n, |e, _| {
                let l = eig.eigenvalues[e].max(0.0);
                eig.eigenvectors[(j, e)].conj() * l.sqrt()
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{gram_from_states, gram_interpolation};

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Numerical("x".into())), 3);
        assert_eq!(exit_code(&Error::Ingestion { line: 2, message: "x".into() }), 4);
        assert_eq!(exit_code(&Error::InvalidPartition("x".into())), 2);
        let v: serde_json::Value =
            serde_json::from_str(&error_json(&Error::Ingestion { line: 7, message: "bad".into() })).unwrap();
        assert_eq!(v["error"], "ingestion");
        assert_eq!(v["line"], 7);
    }

    #[test]
    fn internal_states_reproduce_gram() {
        let g = gram_interpolation(3, 0.4).unwrap();
        let back = gram_from_states(&internal_states(&g)).unwrap();
        assert!((back.matrix() - g.matrix()).iter().all(|d| d.norm() < 1e-12));
    }
}
