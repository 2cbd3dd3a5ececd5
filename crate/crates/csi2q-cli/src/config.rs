//! Run configuration: JSON file plus command-line overrides.
//!
//! The config file is a single versioned JSON document; unknown keys are
//! rejected. Command-line flags override file values, and defaults fill
//! whatever remains. Everything is validated before any stage runs.

use csi2q::datasets::{ChannelConfig, Estimator};
use csi2q::learn::{LrSchedule, TrainConfig};
use csi2q::pipeline::Arch;
use serde::Deserialize;
use std::fs;
use std::path::{Path, PathBuf};

use crate::CliError;

pub const CONFIG_VERSION: u32 = 1;

/// Top-level config file document.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub version: Option<u32>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub synth: SynthSection,
    #[serde(default)]
    pub transform: TransformSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub ablate: TrainSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    pub devices: Option<usize>,
    pub samples_per_device: Option<usize>,
    pub channel: Option<ChannelConfig>,
    pub estimator: Option<Estimator>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformSection {
    pub skip_cim: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub mode: Option<TrainMode>,
    pub arch: Option<Arch>,
    pub lambda: Option<f64>,
    pub lr0: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub train_fraction: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainMode {
    Single,
    Dual,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: FileConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("bad config {}: {e}", path.display())))?;
        if let Some(v) = cfg.version {
            if v != CONFIG_VERSION {
                return Err(CliError::Config(format!(
                    "unsupported config version {v}, expected {CONFIG_VERSION}"
                )));
            }
        }
        Ok(cfg)
    }
}

/// Fully resolved training parameters.
#[derive(Debug, Clone)]
pub struct ResolvedTrain {
    pub mode: TrainMode,
    pub arch: Arch,
    pub train: TrainConfig,
    pub train_fraction: f64,
}

pub fn resolve_train(
    section: &TrainSection,
    mode_flag: Option<TrainMode>,
    arch_flag: Option<Arch>,
    lambda: Option<f64>,
    lr0: Option<f64>,
    epochs: Option<usize>,
    batch_size: Option<usize>,
    train_fraction: Option<f64>,
    seed: u64,
) -> Result<ResolvedTrain, CliError> {
    let defaults = TrainConfig::default();
    let resolved = ResolvedTrain {
        mode: mode_flag.or(section.mode).unwrap_or(TrainMode::Dual),
        arch: arch_flag.or(section.arch).unwrap_or_default(),
        train: TrainConfig {
            lambda: lambda.or(section.lambda).unwrap_or(defaults.lambda),
            lr0: lr0.or(section.lr0).unwrap_or(defaults.lr0),
            epochs: epochs.or(section.epochs).unwrap_or(defaults.epochs),
            batch_size: batch_size
                .or(section.batch_size)
                .unwrap_or(defaults.batch_size),
            rng_seed: seed,
            schedule: LrSchedule::CosineAnnealing,
        },
        train_fraction: train_fraction.or(section.train_fraction).unwrap_or(0.8),
    };
    if !(resolved.train.lambda > 0.0) {
        return Err(CliError::Config("lambda must be positive".into()));
    }
    if !(resolved.train.lr0 > 0.0) {
        return Err(CliError::Config("lr0 must be positive".into()));
    }
    if resolved.train.epochs == 0 {
        return Err(CliError::Config("epochs must be at least 1".into()));
    }
    if resolved.train.batch_size == 0 {
        return Err(CliError::Config("batch size must be at least 1".into()));
    }
    if !(resolved.train_fraction > 0.0 && resolved.train_fraction < 1.0) {
        return Err(CliError::Config(
            "train fraction must be strictly between 0 and 1".into(),
        ));
    }
    Ok(resolved)
}
