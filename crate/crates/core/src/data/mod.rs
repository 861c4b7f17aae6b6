//! Dataset representation, CSV ingestion, standardization, random splits and
//! PCA projection.

mod csv_io;
mod dataset;
mod pca;
mod scale;
mod split;

pub use csv_io::{
    dataset_to_csv, load_csv, load_csv_with, read_dataset_csv, write_atomic, LoadOptions, LoadedCsv,
};
pub use dataset::hex_prefix;
pub use dataset::{Dataset, RowId};
pub use pca::{pca_drop_top, pca_fit, PcaModel};
pub use scale::{standardize, Scaler};
pub use split::{split_positions, split_random, SplitPair};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("file not found: {0}")]
    MissingFile(String),
    #[error("column `{0}` not found")]
    MissingColumn(String),
    #[error("non-binary label `{value}` at data row {row}")]
    NonBinaryLabel { row: usize, value: String },
    #[error("non-numeric value `{value}` in column `{column}` at data row {line}")]
    NotNumeric {
        line: usize,
        column: String,
        value: String,
    },
    #[error("all rows dropped ({dropped} had missing values)")]
    AllRowsDropped { dropped: usize },
    #[error("duplicate row id {0}")]
    DuplicateRowId(RowId),
    #[error("non-finite feature at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("empty dataset")]
    Empty,
    #[error("split fraction {0} outside (0, 1)")]
    InvalidFraction(f64),
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("cannot drop {n_drop} of {n_features} components (need 0 < n_drop < n_features)")]
    DropOutOfRange { n_drop: usize, n_features: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
