use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::DataError;

/// Stable identifier of a dataset row. Survives splitting, cleaning and
/// projection so that profiles can always be traced back to their source row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RowId(pub u64);

impl fmt::Display for RowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Binary-labelled feature matrix, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    features: Vec<f64>,
    n_features: usize,
    labels: Vec<u8>,
    row_ids: Vec<RowId>,
    feature_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from a flat row-major buffer, checking every invariant.
    pub fn from_flat(
        features: Vec<f64>,
        n_features: usize,
        labels: Vec<u8>,
        row_ids: Vec<RowId>,
        feature_names: Vec<String>,
    ) -> Result<Self, DataError> {
        let n_rows = labels.len();
        if features.len() != n_rows * n_features || row_ids.len() != n_rows {
            return Err(DataError::Shape(format!(
                "{} feature values, {} labels, {} row ids for {} features per row",
                features.len(),
                n_rows,
                row_ids.len(),
                n_features
            )));
        }
        if feature_names.len() != n_features {
            return Err(DataError::Shape(format!(
                "{} feature names for {} features",
                feature_names.len(),
                n_features
            )));
        }
        if let Some((row, &value)) = labels.iter().enumerate().find(|(_, &l)| l > 1) {
            return Err(DataError::NonBinaryLabel {
                row,
                value: value.to_string(),
            });
        }
        let mut seen = HashSet::with_capacity(n_rows);
        for id in &row_ids {
            if !seen.insert(*id) {
                return Err(DataError::DuplicateRowId(*id));
            }
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(DataError::NonFinite {
                row: pos / n_features.max(1),
                column: pos % n_features.max(1),
            });
        }
        Ok(Self {
            features,
            n_features,
            labels,
            row_ids,
            feature_names,
        })
    }

    /// Builds a dataset from nested rows. Row ids default to row positions and
    /// feature names to `x0, x1, ...`.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<u8>) -> Result<Self, DataError> {
        let n_features = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_features) {
            return Err(DataError::Shape("ragged rows".into()));
        }
        let features = rows.iter().flatten().copied().collect();
        let row_ids = (0..rows.len() as u64).map(RowId).collect();
        let names = (0..n_features).map(|j| format!("x{j}")).collect();
        Self::from_flat(features, n_features, labels, row_ids, names)
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        (0..self.n_rows()).map(move |i| self.row(i))
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn row_id(&self, i: usize) -> RowId {
        self.row_ids[i]
    }

    pub fn row_ids(&self) -> &[RowId] {
        &self.row_ids
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn flat_features(&self) -> &[f64] {
        &self.features
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// Number of rows per class, indexed by label.
    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.labels.iter().filter(|&&l| l == 1).count();
        [self.labels.len() - ones, ones]
    }

    pub fn has_both_classes(&self) -> bool {
        let [zeros, ones] = self.class_counts();
        zeros > 0 && ones > 0
    }

    pub fn position_of(&self, id: RowId) -> Option<usize> {
        self.row_ids.iter().position(|&r| r == id)
    }

    /// Rows at the given positions, in the given order.
    pub fn subset(&self, positions: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(positions.len() * self.n_features);
        for &i in positions {
            features.extend_from_slice(self.row(i));
        }
        Dataset {
            features,
            n_features: self.n_features,
            labels: positions.iter().map(|&i| self.labels[i]).collect(),
            row_ids: positions.iter().map(|&i| self.row_ids[i]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Same rows, labels and ids with a replacement feature matrix.
    pub fn with_features(
        &self,
        features: Vec<f64>,
        feature_names: Vec<String>,
    ) -> Result<Dataset, DataError> {
        Dataset::from_flat(
            features,
            feature_names.len(),
            self.labels.clone(),
            self.row_ids.clone(),
            feature_names,
        )
    }

    /// Concatenates two datasets with identical feature layout.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset, DataError> {
        if self.feature_names != other.feature_names {
            return Err(DataError::Shape("feature layouts differ".into()));
        }
        let mut features = self.features.clone();
        features.extend_from_slice(&other.features);
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        let mut ids = self.row_ids.clone();
        ids.extend_from_slice(&other.row_ids);
        Dataset::from_flat(features, self.n_features, labels, ids, self.feature_names.clone())
    }

    /// Short content hash of features and labels.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.n_features as u64).to_le_bytes());
        for v in &self.features {
            hasher.update(v.to_bits().to_le_bytes());
        }
        hasher.update(&self.labels);
        hex_prefix(&hasher.finalize(), 8)
    }
}

/// Lowercase hex of the first `n_bytes` bytes.
pub fn hex_prefix(bytes: &[u8], n_bytes: usize) -> String {
    bytes
        .iter()
        .take(n_bytes)
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_binary_labels() {
        let err = Dataset::from_rows(&[vec![1.0], vec![2.0]], vec![0, 2]).unwrap_err();
        assert!(matches!(err, DataError::NonBinaryLabel { row: 1, .. }));
    }

    #[test]
    fn rejects_duplicate_ids_and_nan() {
        let err = Dataset::from_flat(
            vec![0.0, 1.0],
            1,
            vec![0, 1],
            vec![RowId(3), RowId(3)],
            vec!["a".into()],
        )
        .unwrap_err();
        assert!(matches!(err, DataError::DuplicateRowId(RowId(3))));
        let err = Dataset::from_rows(&[vec![f64::NAN]], vec![0]).unwrap_err();
        assert!(matches!(err, DataError::NonFinite { row: 0, column: 0 }));
    }

    #[test]
    fn subset_keeps_ids() {
        let d = Dataset::from_rows(&[vec![1.0], vec![2.0], vec![3.0]], vec![0, 1, 0]).unwrap();
        let s = d.subset(&[2, 0]);
        assert_eq!(s.row_ids(), &[RowId(2), RowId(0)]);
        assert_eq!(s.row(0), &[3.0]);
        assert_eq!(s.class_counts(), [2, 0]);
    }
}
