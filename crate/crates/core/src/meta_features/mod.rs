//! Local meta-features ("profiles") describing how a classifier behaves
//! around one query point.

mod extract;
mod features;
mod io;

pub use extract::ProfileContext;
pub use features::{
    ally_opponent_distances, confidence, local_confusion, local_set_cardinality, proximity, rate_dist,
    LocalConfusion, LocalSet,
};
pub use io::{profiles_from_csv, profiles_to_csv, ProfileFile, ProfileMetadata};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::RowId;
use crate::models::ModelError;
use crate::neighborhood::NeighborhoodError;

/// Value stored for a feature that does not exist for this point or model.
pub const ABSENT: f64 = -1.0;

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("probability {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("neighbour set is empty")]
    EmptyNeighborhood,
    #[error("rate_dist needs at least one of the ally and opponent distances")]
    NoDistances,
    #[error("unknown diagnosis label `{0}`")]
    UnknownLabel(String),
    #[error("profile file: {0}")]
    Format(String),
    #[error(transparent)]
    Neighborhood(#[from] NeighborhoodError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// The three diagnosis classes. Variant order is alphabetical by name, so
/// index order doubles as the tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DiagnosisLabel {
    DataMixedUp,
    GoodPrediction,
    WeakModel,
}

impl DiagnosisLabel {
    pub const ALL: [DiagnosisLabel; 3] = [Self::DataMixedUp, Self::GoodPrediction, Self::WeakModel];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Short code used in rule text.
    pub fn code(self) -> &'static str {
        match self {
            Self::DataMixedUp => "MD",
            Self::GoodPrediction => "C",
            Self::WeakModel => "WM",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::DataMixedUp => "DataMixedUp",
            Self::GoodPrediction => "GoodPrediction",
            Self::WeakModel => "WeakModel",
        }
    }
}

impl fmt::Display for DiagnosisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DiagnosisLabel {
    type Err = ProfileError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|l| l.name() == s || l.code() == s)
            .ok_or_else(|| ProfileError::UnknownLabel(s.to_string()))
    }
}

pub const N_FEATURES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    LocalAccuracy,
    RTp,
    RTn,
    RFp,
    RFn,
    Conf,
    KnnPredConf,
    DAllyGt,
    DOppGt,
    RateDistGt,
    DAllyPred,
    DOppPred,
    RateDistPred,
    MstFracGt,
    Proximity,
    LocalSetCardinalityPred,
}

impl Feature {
    pub const ALL: [Feature; N_FEATURES] = [
        Self::LocalAccuracy,
        Self::RTp,
        Self::RTn,
        Self::RFp,
        Self::RFn,
        Self::Conf,
        Self::KnnPredConf,
        Self::DAllyGt,
        Self::DOppGt,
        Self::RateDistGt,
        Self::DAllyPred,
        Self::DOppPred,
        Self::RateDistPred,
        Self::MstFracGt,
        Self::Proximity,
        Self::LocalSetCardinalityPred,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Column name in profile files.
    pub fn name(self) -> &'static str {
        FEATURE_NAMES[self.index()]
    }

    /// Name used in rules and reports.
    pub fn display(self) -> &'static str {
        DISPLAY_NAMES[self.index()]
    }

    pub fn from_name(s: &str) -> Option<Feature> {
        Self::ALL.into_iter().find(|f| f.name() == s || f.display() == s)
    }
}

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "local_accuracy",
    "r_tp",
    "r_tn",
    "r_fp",
    "r_fn",
    "conf",
    "knn_pred_conf",
    "d_ally_gt",
    "d_opp_gt",
    "rate_dist_gt",
    "d_ally_pred",
    "d_opp_pred",
    "rate_dist_pred",
    "mst_frac_gt",
    "proximity",
    "local_set_cardinality_pred",
];

pub const DISPLAY_NAMES: [&str; N_FEATURES] = [
    "local accuracy",
    "rTP",
    "rTN",
    "rFP",
    "rFN",
    "Conf",
    "knn pred conf",
    "D ally gt",
    "D opp gt",
    "rate dist gt",
    "D ally pred",
    "D opp pred",
    "rate dist pred",
    "MST frac gt",
    "proximity",
    "local set cardinality pred",
];

/// Meta-feature vector of one query point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileVector {
    pub row_id: RowId,
    pub values: [f64; N_FEATURES],
    /// Set when no training point carries the opposite predicted label, in
    /// which case the local set covers the whole training set.
    pub lsc_no_opponent: bool,
    pub label: Option<DiagnosisLabel>,
}

impl ProfileVector {
    pub fn get(&self, f: Feature) -> f64 {
        self.values[f.index()]
    }

    pub fn with_label(mut self, label: DiagnosisLabel) -> Self {
        self.label = Some(label);
        self
    }
}
