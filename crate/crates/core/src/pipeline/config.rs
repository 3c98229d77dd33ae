//! Experiment configuration: a TOML file with flat sections `dataset`,
//! `split`, `models.fnn` / `models.lstm` / `models.svm`, `experiment`, and
//! `output`. Every field has a default, so a minimal config is valid.

use super::synth::SyntheticCorpusSpec;
use crate::corpus::SplitSpec;
use crate::error::{Error, Result};
use crate::models::{ModelKind, TrainConfig};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Where the labeled corpus comes from: CSV files (merged, with ids prefixed
/// by file stem) or the synthetic generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    /// Field-level defaults: a `[dataset]` section that names only `files`
    /// must not inherit the synthetic default.
    #[serde(default)]
    pub files: Vec<PathBuf>,
    #[serde(default)]
    pub synthetic: Option<SyntheticCorpusSpec>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            files: Vec::new(),
            synthetic: Some(SyntheticCorpusSpec::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        let spec = SplitSpec::default();
        SplitConfig {
            train_fraction: spec.train_fraction,
            seed: spec.seed,
        }
    }
}

impl SplitConfig {
    pub fn to_spec(&self) -> SplitSpec {
        SplitSpec {
            train_fraction: self.train_fraction,
            seed: self.seed,
        }
    }
}

/// Per-model hyperparameters; the per-trial seed overrides `seed`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelsConfig {
    pub fnn: TrainConfigToml,
    pub lstm: TrainConfigToml,
    pub svm: TrainConfigToml,
}

/// `TrainConfig` with TOML defaults applied field-wise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfigToml {
    pub epochs: usize,
    pub batch_size: usize,
    pub dropout_rate: f64,
    pub learning_rate: f64,
    pub lambda: f64,
}

impl Default for TrainConfigToml {
    fn default() -> Self {
        let c = TrainConfig::default();
        TrainConfigToml {
            epochs: c.epochs,
            batch_size: c.batch_size,
            dropout_rate: c.dropout_rate,
            learning_rate: c.learning_rate,
            lambda: c.lambda,
        }
    }
}

impl TrainConfigToml {
    pub fn with_seed(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            dropout_rate: self.dropout_rate,
            learning_rate: self.learning_rate,
            lambda: self.lambda,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub trials: usize,
    pub base_seed: u64,
    /// Model kinds to run, in report order.
    pub models: Vec<ModelKind>,
    /// Re-split (and re-fit the vectorizer) per trial instead of holding one
    /// fixed split; off by default.
    pub resplit_per_trial: bool,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            trials: 10,
            base_seed: 100,
            models: vec![ModelKind::Fnn, ModelKind::Lstm, ModelKind::Svm],
            resplit_per_trial: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
        }
    }
}

/// The resolved experiment configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub split: SplitConfig,
    pub models: ModelsConfig,
    pub experiment: ExperimentSection,
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_toml(contents: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(contents).map_err(|e| Error::Config(format!("config file: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let contents = std::fs::read_to_string(path)?;
        Self::from_toml(&contents)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dataset.files.is_empty() && self.dataset.synthetic.is_none() {
            return Err(Error::Config(
                "dataset must name CSV files or a synthetic spec".into(),
            ));
        }
        if !self.dataset.files.is_empty() && self.dataset.synthetic.is_some() {
            return Err(Error::Config(
                "dataset cannot use both files and a synthetic spec".into(),
            ));
        }
        if let Some(s) = &self.dataset.synthetic {
            s.validate()?;
        }
        if self.experiment.trials == 0 {
            return Err(Error::Config("experiment.trials must be >= 1".into()));
        }
        if self.experiment.models.is_empty() {
            return Err(Error::Config("experiment.models must be non-empty".into()));
        }
        self.split.to_spec().validate()?;
        for (name, m) in [
            ("fnn", &self.models.fnn),
            ("lstm", &self.models.lstm),
            ("svm", &self.models.svm),
        ] {
            m.with_seed(0)
                .validate()
                .map_err(|e| Error::Config(format!("models.{name}: {e}")))?;
        }
        Ok(())
    }
}
