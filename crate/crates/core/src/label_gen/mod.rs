//! Ground-truth diagnosis labels for meta-training: iterative cleaning of a
//! dataset, then weak-model and component-drop label generators.

mod clean;
mod curve;
mod generate;
mod pool;

pub use clean::{clean_dataset, CleaningConfig, CleaningReport, CleaningRound};
pub use curve::{accuracy_curve, select_n_drop, underfit_check, CurvePoint, UnderfitGuard, UnderfitVerdict, Verdict};
pub use generate::{
    choose_n_drop, gen_mixed_labels, gen_weak_labels, GenOptions, MixedOutcome, WeakOutcome, AUTO_DROP_MIN_TEST_DROP,
};
pub use pool::{build_pool, Generator, LabeledPool, Provenance};

use thiserror::Error;

use crate::data::DataError;
use crate::meta_features::{DiagnosisLabel, ProfileError};
use crate::models::ModelError;

#[derive(Debug, Error)]
pub enum LabelGenError {
    #[error("cleaning left {rows} rows (class counts {counts:?}), below the floor of {floor}")]
    Collapsed {
        rows: usize,
        counts: [usize; 2],
        floor: usize,
        report: Box<CleaningReport>,
    },
    #[error("accuracy threshold {0} outside (0.5, 1]")]
    BadThreshold(f64),
    #[error("weak config `{weak}` is not strictly weaker than base config `{base}`")]
    NotWeaker { weak: String, base: String },
    #[error("underfit check refused: {0}")]
    Refused(Box<UnderfitVerdict>),
    #[error("malformed accuracy curve: {0}")]
    MalformedCurve(String),
    #[error("pool has no {0} profiles")]
    MissingClass(DiagnosisLabel),
    #[error("pool provenance has {provenance} entries for {profiles} profiles")]
    Provenance { profiles: usize, provenance: usize },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
