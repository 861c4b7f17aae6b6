//! Exact K-nearest-neighbour search and Euclidean minimum spanning trees.

mod knn;
mod mst;

pub use knn::{default_k, euclidean, KnnIndex, Neighbor, NeighborSet};
pub use mst::{build_mst, build_mst_kruskal, build_mst_sampled, MstEdge, MstGraph, MST_MAX_ROWS};

use thiserror::Error;

use crate::data::RowId;

#[derive(Debug, Error)]
pub enum NeighborhoodError {
    #[error("index built over an empty dataset")]
    Empty,
    #[error("K must be at least 1, got {0}")]
    InvalidK(usize),
    #[error("query has {got} features, index expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("spanning tree needs at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("row {0} is not in the graph")]
    UnknownRow(RowId),
    #[error("neighbour set is empty")]
    EmptyNeighborhood,
}
