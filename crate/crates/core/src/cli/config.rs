use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{fourier_matrix, haar_unitary, UnitaryMatrix};
use crate::noise::{gram_interpolation, GramMatrix, NoiseConfig};
use crate::partitions::{equipartition, Partition};

/// One configuration document shared by every subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub n: usize,
    pub m: usize,
    #[serde(default = "UnitaryConfig::haar")]
    pub unitary: UnitaryConfig,
    pub partition: PartitionConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub method: MethodConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study: Option<StudyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fourier: Option<FourierConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum UnitaryConfig {
    Haar,
    Fourier,
    File { path: PathBuf },
}

impl UnitaryConfig {
    fn haar() -> Self {
        UnitaryConfig::Haar
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PartitionConfig {
    Equipartition(EquipartitionConfig),
    Subsets(SubsetsConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquipartitionKind {
    Equipartition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquipartitionConfig {
    pub kind: EquipartitionKind,
    #[serde(rename = "K")]
    pub k: usize,
}

/// Bins as lists of 1-based output modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsetsConfig {
    pub subsets: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MethodConfig {
    #[default]
    Ryser,
    Glynn {
        beta: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ValidationConfig {
    /// `p_null` level that ends a test; below 1/2 rejects `H0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
    /// Distinguishability of the alternative hypothesis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_alt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_values: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_values: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runs_per_trial: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_count: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FourierKind {
    SingleMode,
    OddModes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierConfig {
    pub kind: FourierKind,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Config = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.check()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_json(&text)?;
        // matrix files are resolved against the config's directory
        if let UnitaryConfig::File { path: file } = &mut config.unitary {
            if file.is_relative() {
                if let Some(dir) = path.parent() {
                    *file = dir.join(&*file);
                }
            }
        }
        Ok(config)
    }

    fn check(&self) -> Result<()> {
        if self.n == 0 || self.n > self.m {
            return Err(Error::Config(format!("need 1 <= n <= m, got n={}, m={}", self.n, self.m)));
        }
        self.noise.validate()?;
        if let MethodConfig::Glynn { beta } = self.method {
            if !(beta > 0.0) {
                return Err(Error::Config(format!("beta must be > 0, got {beta}")));
            }
        }
        Ok(())
    }

    pub fn unitary(&self, seed: u64) -> Result<UnitaryMatrix> {
        let u = match &self.unitary {
            UnitaryConfig::Haar => haar_unitary(self.m, seed)?,
            UnitaryConfig::Fourier => fourier_matrix(self.m)?,
            UnitaryConfig::File { path } => UnitaryMatrix::load(path)?,
        };
        if u.dim() != self.m {
            return Err(Error::Config(format!("unitary has dimension {}, config m = {}", u.dim(), self.m)));
        }
        Ok(u)
    }

    pub fn partition(&self) -> Result<Partition> {
        self.partition_for(self.m)
    }

    /// The configured partition on `m` modes (equipartitions rescale).
    pub fn partition_for(&self, m: usize) -> Result<Partition> {
        match &self.partition {
            PartitionConfig::Equipartition(e) => equipartition(m, e.k),
            PartitionConfig::Subsets(s) => Partition::new(s.subsets.clone(), m),
        }
    }

    /// Bin count of the configured partition.
    pub fn num_bins(&self) -> usize {
        match &self.partition {
            PartitionConfig::Equipartition(e) => e.k,
            PartitionConfig::Subsets(s) => s.subsets.len(),
        }
    }

    pub fn gram(&self) -> Result<GramMatrix> {
        self.noise.gram(self.n)
    }

    /// Noise model with the same loss and dark counts but x-model overlap `x`.
    pub fn noise_with_x(&self, x: f64) -> Result<NoiseConfig> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Config(format!("x = {x} outside [0, 1]")));
        }
        Ok(NoiseConfig { x: Some(x), gram: None, ..self.noise.clone() })
    }

    /// Overlap of the x-model when no explicit Gram matrix is given.
    pub fn x(&self) -> Option<f64> {
        if self.noise.gram.is_some() {
            None
        } else {
            Some(self.noise.x.unwrap_or(1.0))
        }
    }

    pub fn validation(&self) -> ValidationConfig {
        self.validation.clone().unwrap_or_default()
    }

    pub fn study(&self) -> StudyConfig {
        self.study.clone().unwrap_or_default()
    }
}

/// `gram_interpolation` with config-flavoured errors.
pub(crate) fn x_gram(n: usize, x: f64) -> Result<GramMatrix> {
    gram_interpolation(n, x).map_err(|e| Error::Config(e.to_string()))
}
