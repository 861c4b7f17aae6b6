//! Base classifiers under diagnosis: gradient-boosted trees and a
//! one-hidden-layer perceptron, behind one probabilistic contract.
//!
//! Predictors report the probability of **class 0**. The predicted label is 0
//! when that probability is strictly above 0.5; an exact 0.5 goes to class 1.

mod gbt;
mod mlp;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Dataset;
pub(crate) use gbt::split_point;
pub use gbt::{GbtConfig, GbtModel, RegressionTree, TreeNode};
pub use mlp::{MlpConfig, MlpModel};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("training data must contain both classes (counts {0:?})")]
    SingleClass([usize; 2]),
    #[error("empty dataset")]
    Empty,
    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("training diverged at iteration {iteration} (loss {loss}; {detail})")]
    Diverged {
        iteration: usize,
        loss: f64,
        detail: String,
    },
    #[error("operation not supported for {0} models")]
    UnsupportedFamily(Family),
    #[error("unsupported model format version {0}")]
    FormatVersion(u32),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gbt,
    Mlp,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Gbt => "gbt",
            Family::Mlp => "mlp",
        })
    }
}

impl std::str::FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gbt" | "xgb" => Ok(Family::Gbt),
            "mlp" => Ok(Family::Mlp),
            other => Err(format!("unknown model family `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ModelConfig {
    Gbt(GbtConfig),
    Mlp(MlpConfig),
}

impl ModelConfig {
    pub fn family(&self) -> Family {
        match self {
            ModelConfig::Gbt(_) => Family::Gbt,
            ModelConfig::Mlp(_) => Family::Mlp,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            ModelConfig::Gbt(c) => c.validate(),
            ModelConfig::Mlp(c) => c.validate(),
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            ModelConfig::Gbt(c) => c.seed,
            ModelConfig::Mlp(c) => c.seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> ModelConfig {
        let mut out = self.clone();
        match &mut out {
            ModelConfig::Gbt(c) => c.seed = seed,
            ModelConfig::Mlp(c) => c.seed = seed,
        }
        out
    }

    /// True when `self` has no more capacity than `other` in every knob and
    /// strictly less in at least one. Configs of different families are
    /// incomparable.
    pub fn is_weaker_than(&self, other: &ModelConfig) -> bool {
        fn dominated(a: [usize; 2], b: [usize; 2]) -> bool {
            a[0] <= b[0] && a[1] <= b[1] && (a[0] < b[0] || a[1] < b[1])
        }
        match (self, other) {
            (ModelConfig::Gbt(a), ModelConfig::Gbt(b)) => {
                dominated([a.n_trees, a.max_depth], [b.n_trees, b.max_depth])
            }
            (ModelConfig::Mlp(a), ModelConfig::Mlp(b)) => dominated(
                [a.hidden_size, a.n_iterations],
                [b.hidden_size, b.n_iterations],
            ),
            _ => false,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            ModelConfig::Gbt(c) => format!("{} trees, depth {}", c.n_trees, c.max_depth),
            ModelConfig::Mlp(c) => format!("{} iter, ({},) hl", c.n_iterations, c.hidden_size),
        }
    }

    pub fn train(&self, d: &Dataset) -> Result<TrainedModel, ModelError> {
        match self {
            ModelConfig::Gbt(c) => train_gbt(d, c),
            ModelConfig::Mlp(c) => train_mlp(d, c),
        }
    }
}

/// Uniform prediction contract shared by both families.
pub trait ProbabilisticClassifier {
    /// Probability of class 0; `x` must match the training width.
    fn proba_class0_unchecked(&self, x: &[f64]) -> f64;
}

impl ProbabilisticClassifier for GbtModel {
    fn proba_class0_unchecked(&self, x: &[f64]) -> f64 {
        gbt::sigmoid(-self.raw_score(x))
    }
}

impl ProbabilisticClassifier for MlpModel {
    fn proba_class0_unchecked(&self, x: &[f64]) -> f64 {
        gbt::sigmoid(-self.raw_score(x))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FittedParams {
    Gbt(GbtModel),
    Mlp(MlpModel),
}

/// An immutable fitted binary classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub config: ModelConfig,
    pub n_features: usize,
    /// Content hash of the training set.
    pub training_fingerprint: String,
    pub params: FittedParams,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    model: TrainedModel,
}

/// Predicted label for a class-0 probability.
pub fn label_from_proba(p_class0: f64) -> u8 {
    if p_class0 > 0.5 {
        0
    } else {
        1
    }
}

fn check_trainable(d: &Dataset) -> Result<(), ModelError> {
    if d.is_empty() {
        return Err(ModelError::Empty);
    }
    if !d.has_both_classes() {
        return Err(ModelError::SingleClass(d.class_counts()));
    }
    Ok(())
}

pub fn train_gbt(d: &Dataset, cfg: &GbtConfig) -> Result<TrainedModel, ModelError> {
    cfg.validate()?;
    check_trainable(d)?;
    Ok(TrainedModel {
        config: ModelConfig::Gbt(cfg.clone()),
        n_features: d.n_features(),
        training_fingerprint: d.fingerprint(),
        params: FittedParams::Gbt(gbt::fit(d, cfg)?),
    })
}

pub fn train_mlp(d: &Dataset, cfg: &MlpConfig) -> Result<TrainedModel, ModelError> {
    cfg.validate()?;
    check_trainable(d)?;
    Ok(TrainedModel {
        config: ModelConfig::Mlp(cfg.clone()),
        n_features: d.n_features(),
        training_fingerprint: d.fingerprint(),
        params: FittedParams::Mlp(mlp::fit(d, cfg)?),
    })
}

impl TrainedModel {
    pub fn family(&self) -> Family {
        self.config.family()
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), ModelError> {
        if x.len() != self.n_features {
            return Err(ModelError::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        Ok(())
    }

    fn classifier(&self) -> &dyn ProbabilisticClassifier {
        match &self.params {
            FittedParams::Gbt(m) => m,
            FittedParams::Mlp(m) => m,
        }
    }

    /// Probability assigned to class 0.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64, ModelError> {
        self.check_dim(x)?;
        Ok(self.classifier().proba_class0_unchecked(x))
    }

    pub fn predict_label(&self, x: &[f64]) -> Result<u8, ModelError> {
        self.predict_proba(x).map(label_from_proba)
    }

    /// Class-0 probabilities for every row.
    pub fn predict_dataset(&self, d: &Dataset) -> Result<Vec<f64>, ModelError> {
        if d.n_features() != self.n_features {
            return Err(ModelError::DimensionMismatch {
                expected: self.n_features,
                got: d.n_features(),
            });
        }
        let c = self.classifier();
        Ok(d.rows().map(|x| c.proba_class0_unchecked(x)).collect())
    }

    pub fn accuracy(&self, d: &Dataset) -> Result<f64, ModelError> {
        if d.is_empty() {
            return Err(ModelError::Empty);
        }
        let probs = self.predict_dataset(d)?;
        let correct = probs
            .iter()
            .zip(d.labels())
            .filter(|(p, &y)| label_from_proba(**p) == y)
            .count();
        Ok(correct as f64 / d.n_rows() as f64)
    }

    pub fn gbt(&self) -> Result<&GbtModel, ModelError> {
        match &self.params {
            FittedParams::Gbt(m) => Ok(m),
            FittedParams::Mlp(_) => Err(ModelError::UnsupportedFamily(Family::Mlp)),
        }
    }

    /// Number of trees whose leaf contains both points.
    pub fn leaf_comembership(&self, xi: &[f64], xj: &[f64]) -> Result<usize, ModelError> {
        let m = self.gbt()?;
        self.check_dim(xi)?;
        self.check_dim(xj)?;
        Ok(m.trees
            .iter()
            .filter(|t| t.leaf_of(xi) == t.leaf_of(xj))
            .count())
    }

    pub fn n_trees(&self) -> Option<usize> {
        self.gbt().ok().map(|m| m.trees.len())
    }

    pub fn to_json(&self) -> Result<String, ModelError> {
        Ok(serde_json::to_string_pretty(&ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self, ModelError> {
        let file: ModelFile = serde_json::from_str(s)?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(ModelError::FormatVersion(file.format_version));
        }
        Ok(file.model)
    }
}
