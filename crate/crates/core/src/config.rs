//! Pipeline configuration file.
//!
//! A single JSON document with a `version` field. Every field has a default,
//! so `{}` is a complete configuration. Relative paths are resolved against
//! the directory holding the config file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hog::HogParams;
use crate::pck::PckConfig;
use crate::segmentation::SegmentationConfig;
use crate::svm::TrainHyper;
use crate::trigger::TriggerConfig;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse config {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("unsupported config version {0} (expected {CONFIG_VERSION})")]
    Version(u32),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("{what} not found: {path}")]
    MissingFile { what: &'static str, path: String },
}

/// Which pose backend runs on triggered frames.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum EstimatorSpec {
    /// Box-scaled joint template.
    #[default]
    Stub,
    /// Poses precomputed by an external estimator, consumed in order.
    PoseFile(PathBuf),
}

impl fmt::Display for EstimatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorSpec::Stub => f.write_str("stub"),
            EstimatorSpec::PoseFile(p) => write!(f, "pose-file:{}", p.display()),
        }
    }
}

impl FromStr for EstimatorSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "stub" {
            Ok(EstimatorSpec::Stub)
        } else if let Some(path) = s.strip_prefix("pose-file:") {
            if path.is_empty() {
                Err("pose-file estimator needs a path".into())
            } else {
                Ok(EstimatorSpec::PoseFile(PathBuf::from(path)))
            }
        } else {
            Err(format!("unknown estimator {s:?} (expected stub or pose-file:<path>)"))
        }
    }
}

impl TryFrom<String> for EstimatorSpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<EstimatorSpec> for String {
    fn from(e: EstimatorSpec) -> String {
        e.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub lambda: f64,
    pub epochs: usize,
    pub folds: usize,
    /// Derive `hog.l_block` from the training frames' boxes.
    pub calibrate_block: bool,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        let h = TrainHyper::default();
        Self {
            lambda: h.lambda,
            epochs: h.epochs,
            folds: 10,
            calibrate_block: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub version: u32,
    pub segmentation: SegmentationConfig,
    pub hog: HogParams,
    pub training: TrainingConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model_path: Option<PathBuf>,
    pub trigger: TriggerConfig,
    pub pck: PckConfig,
    pub estimator: EstimatorSpec,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            segmentation: SegmentationConfig::default(),
            hog: HogParams::default(),
            training: TrainingConfig::default(),
            model_path: None,
            trigger: TriggerConfig::default(),
            pck: PckConfig::default(),
            estimator: EstimatorSpec::Stub,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn hyper(&self) -> TrainHyper {
        TrainHyper {
            lambda: self.training.lambda,
            epochs: self.training.epochs,
            seed: self.seed,
        }
    }

    /// Parses and validates; relative paths are joined onto `base`.
    pub fn from_json(text: &str, origin: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut cfg: PipelineConfig =
            serde_json::from_str(text).map_err(|source| ConfigError::Parse {
                path: origin.to_string(),
                source,
            })?;
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_json(&text, &path.display().to_string(), base)
    }

    fn resolve_paths(&mut self, base: &Path) {
        if let Some(p) = &self.model_path {
            if p.is_relative() {
                self.model_path = Some(base.join(p));
            }
        }
        if let EstimatorSpec::PoseFile(p) = &self.estimator {
            if p.is_relative() {
                self.estimator = EstimatorSpec::PoseFile(base.join(p));
            }
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.version != CONFIG_VERSION {
            return Err(ConfigError::Version(self.version));
        }
        let invalid = |e: &dyn fmt::Display| ConfigError::Invalid(e.to_string());
        self.hog.validate().map_err(|e| invalid(&e))?;
        self.trigger.validate().map_err(|e| invalid(&e))?;
        self.pck.validate().map_err(|e| invalid(&e))?;
        if self.pck.alphas.is_empty() {
            return Err(ConfigError::Invalid("pck.alphas must not be empty".into()));
        }
        if !(self.segmentation.tau_e.is_finite() && self.segmentation.tau_e >= 0.0) {
            return Err(ConfigError::Invalid(format!(
                "segmentation.tau_e must be a finite value >= 0, got {}",
                self.segmentation.tau_e
            )));
        }
        if !(self.training.lambda > 0.0 && self.training.lambda.is_finite()) {
            return Err(ConfigError::Invalid(format!(
                "training.lambda must be positive, got {}",
                self.training.lambda
            )));
        }
        if self.training.epochs == 0 {
            return Err(ConfigError::Invalid("training.epochs must be >= 1".into()));
        }
        if self.training.folds < 2 {
            return Err(ConfigError::Invalid(format!(
                "training.folds must be >= 2, got {}",
                self.training.folds
            )));
        }
        if let Some(p) = &self.model_path {
            if !p.is_file() {
                return Err(ConfigError::MissingFile {
                    what: "model",
                    path: p.display().to_string(),
                });
            }
        }
        if let EstimatorSpec::PoseFile(p) = &self.estimator {
            if !p.is_file() {
                return Err(ConfigError::MissingFile {
                    what: "pose file",
                    path: p.display().to_string(),
                });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }
}
