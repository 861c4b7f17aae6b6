//! Three-class decision tree over profile vectors: training, rule
//! extraction, feature importance, evaluation and the experiment
//! configurations built on top of them.

mod eval;
mod experiment;
mod rules;
mod tree;

pub use eval::{evaluate, summarize, EvalReport, EvalSummary, MeanStd, RunMeta};
pub use experiment::{
    ablation, pool_matrix, rebalance, run_configuration, split_pool, AblationStep, Configuration, RunOptions,
};
pub use rules::{extract_rules, feature_importance, Comparator, Condition, DecisionRule};
pub use tree::{train_tree, MetaNode, MetaTree, TreeParams};

use thiserror::Error;

use crate::label_gen::LabelGenError;
use crate::meta_features::DiagnosisLabel;

#[derive(Debug, Error)]
pub enum MetaError {
    #[error("empty pool")]
    EmptyPool,
    #[error("pool has no {0} profiles")]
    MissingClass(DiagnosisLabel),
    #[error("profile {0} has no diagnosis label")]
    Unlabelled(usize),
    #[error("invalid tree parameters: {0}")]
    InvalidParams(String),
    #[error("feature {feature} is not finite ({value})")]
    NonFinite { feature: String, value: f64 },
    #[error("cannot build configuration: {0}")]
    Partition(String),
    #[error("unknown configuration `{0}` (expected cross_dataset_small, cross_dataset_random, cross_family or pooled_split)")]
    UnknownConfiguration(String),
    #[error(transparent)]
    Pool(#[from] LabelGenError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
