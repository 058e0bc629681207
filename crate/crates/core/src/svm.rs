//! Linear SVM for the north / not-north verdict.
//!
//! Training standardizes every feature dimension and minimizes the
//! L2-regularized hinge loss with Pegasos-style stochastic subgradient steps
//! (`eta_t = 1 / (lambda * t)`, epoch-wise seeded shuffle, projection onto the
//! `1 / sqrt(lambda)` ball). The bias is carried as an extra constant input
//! and regularized with the weights.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::hog::{FeatureVector, HogParams};

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error("training set is empty")]
    Empty,
    #[error("training set contains a single class; both N and notN samples are required")]
    SingleClass,
    #[error("sample {index} has {actual} features, expected {expected}")]
    InconsistentLength {
        index: usize,
        expected: usize,
        actual: usize,
    },
    #[error("feature has {actual} entries, model expects {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("invalid hyper-parameters: {0}")]
    InvalidHyper(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainHyper {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainHyper {
    fn default() -> Self {
        Self {
            lambda: 1e-4,
            epochs: 100,
            seed: 0,
        }
    }
}

/// Trained orientation classifier. Serialized as a flat JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrientationModel {
    pub version: u32,
    #[serde(flatten)]
    pub hog_params: HogParams,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub feature_mean: Vec<f64>,
    pub feature_std: Vec<f64>,
}

impl OrientationModel {
    pub fn validate(&self) -> Result<(), TrainError> {
        let n = self.hog_params.feature_len();
        if self.version != MODEL_VERSION {
            return Err(TrainError::InvalidModel(format!(
                "unsupported version {}",
                self.version
            )));
        }
        self.hog_params
            .validate()
            .map_err(|e| TrainError::InvalidModel(e.to_string()))?;
        if self.weights.len() != n || self.feature_mean.len() != n || self.feature_std.len() != n
        {
            return Err(TrainError::InvalidModel(format!(
                "vector lengths {}/{}/{} do not match feature length {n}",
                self.weights.len(),
                self.feature_mean.len(),
                self.feature_std.len()
            )));
        }
        if self.feature_std.iter().any(|&s| s.is_nan() || s <= 0.0) {
            return Err(TrainError::InvalidModel(
                "feature_std entries must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Decision value `w . standardize(f) + b`.
    pub fn score(&self, feature: &FeatureVector) -> Result<f64, TrainError> {
        if feature.len() != self.weights.len() {
            return Err(TrainError::LengthMismatch {
                expected: self.weights.len(),
                actual: feature.len(),
            });
        }
        let dot: f64 = feature
            .0
            .iter()
            .zip(&self.feature_mean)
            .zip(&self.feature_std)
            .zip(&self.weights)
            .map(|(((x, m), s), w)| w * (x - m) / s)
            .sum();
        Ok(dot + self.bias)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes") + "\n"
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json())
            .map_err(|e| Error::io(format!("write {}", path.display()), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::io(format!("read {}", path.display()), e))?;
        let model: OrientationModel = serde_json::from_str(&text)
            .map_err(|e| Error::json(format!("parse {}", path.display()), e))?;
        model.validate()?;
        Ok(model)
    }
}

/// `bit_N`: true iff the decision value is non-negative (ties go to north).
pub fn predict_north(model: &OrientationModel, feature: &FeatureVector) -> Result<bool, TrainError> {
    Ok(model.score(feature)? >= 0.0)
}

/// Trains on `(feature, is_north)` pairs.
pub fn train_orientation(
    samples: &[(FeatureVector, bool)],
    hog_params: &HogParams,
    hyper: &TrainHyper,
) -> Result<OrientationModel, TrainError> {
    if !(hyper.lambda > 0.0 && hyper.lambda.is_finite()) || hyper.epochs == 0 {
        return Err(TrainError::InvalidHyper(format!(
            "lambda must be positive and epochs >= 1 (lambda={}, epochs={})",
            hyper.lambda, hyper.epochs
        )));
    }
    let first = samples.first().ok_or(TrainError::Empty)?;
    let dim = first.0.len();
    for (index, (f, _)) in samples.iter().enumerate() {
        if f.len() != dim {
            return Err(TrainError::InconsistentLength {
                index,
                expected: dim,
                actual: f.len(),
            });
        }
    }
    if hog_params.feature_len() != dim {
        return Err(TrainError::InconsistentLength {
            index: 0,
            expected: hog_params.feature_len(),
            actual: dim,
        });
    }
    let positives = samples.iter().filter(|(_, y)| *y).count();
    if positives == 0 || positives == samples.len() {
        return Err(TrainError::SingleClass);
    }

    let n = samples.len() as f64;
    let mut mean = vec![0.0; dim];
    for (f, _) in samples {
        for (m, x) in mean.iter_mut().zip(&f.0) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut std = vec![0.0; dim];
    for (f, _) in samples {
        for ((s, x), m) in std.iter_mut().zip(&f.0).zip(&mean) {
            *s += (x - m) * (x - m);
        }
    }
    for s in std.iter_mut() {
        *s = (*s / n).sqrt();
        // constant dimensions carry no information; unit scale keeps them at 0
        if s.is_nan() || *s <= 1e-12 {
            *s = 1.0;
        }
    }

    // standardized inputs with a trailing constant 1 for the bias
    let data: Vec<(Vec<f64>, f64)> = samples
        .iter()
        .map(|(f, y)| {
            let mut x: Vec<f64> = f
                .0
                .iter()
                .zip(&mean)
                .zip(&std)
                .map(|((x, m), s)| (x - m) / s)
                .collect();
            x.push(1.0);
            (x, if *y { 1.0 } else { -1.0 })
        })
        .collect();

    let lambda = hyper.lambda;
    let radius = 1.0 / lambda.sqrt();
    let mut w = vec![0.0; dim + 1];
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut t = 0u64;
    for _ in 0..hyper.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let (x, y) = &data[i];
            let eta = 1.0 / (lambda * t as f64);
            let margin = y * dot(&w, x);
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|wj| *wj *= shrink);
            if margin < 1.0 {
                for (wj, xj) in w.iter_mut().zip(x) {
                    *wj += eta * y * xj;
                }
            }
            let norm = dot(&w, &w).sqrt();
            if norm > radius {
                let s = radius / norm;
                w.iter_mut().for_each(|wj| *wj *= s);
            }
        }
    }
    let bias = w.pop().expect("bias slot");
    Ok(OrientationModel {
        version: MODEL_VERSION,
        hog_params: hog_params.clone(),
        weights: w,
        bias,
        feature_mean: mean,
        feature_std: std,
    })
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
