use serde::{Deserialize, Serialize};

use super::{DataError, Dataset};

/// Per-column z-score parameters. Columns with zero variance are flagged and
/// mapped to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub zero_variance: Vec<bool>,
}

impl Scaler {
    pub fn fit(d: &Dataset) -> Result<Self, DataError> {
        if d.is_empty() {
            return Err(DataError::Empty);
        }
        let n = d.n_rows() as f64;
        let p = d.n_features();
        let mut mean = vec![0.0; p];
        for row in d.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; p];
        for row in d.rows() {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std: Vec<f64> = var.iter().map(|s| (s / n).sqrt()).collect();
        // relative cutoff: a column is constant if its spread is rounding noise
        let zero_variance = std
            .iter()
            .zip(&mean)
            .map(|(s, m)| *s <= 1e-12 * m.abs().max(1.0))
            .collect();
        Ok(Self {
            mean,
            std,
            zero_variance,
        })
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, v)| {
                if self.zero_variance[j] {
                    0.0
                } else {
                    (v - self.mean[j]) / self.std[j]
                }
            })
            .collect()
    }

    pub fn transform(&self, d: &Dataset) -> Result<Dataset, DataError> {
        if d.n_features() != self.mean.len() {
            return Err(DataError::Shape(format!(
                "scaler fitted on {} features, dataset has {}",
                self.mean.len(),
                d.n_features()
            )));
        }
        let flat = d.rows().flat_map(|r| self.transform_row(r)).collect();
        d.with_features(flat, d.feature_names().to_vec())
    }
}

/// Z-scores every column (population variance).
pub fn standardize(d: &Dataset) -> Result<(Dataset, Scaler), DataError> {
    let scaler = Scaler::fit(d)?;
    let out = scaler.transform(d)?;
    Ok((out, scaler))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn col(values: &[f64]) -> Dataset {
        let rows: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
        Dataset::from_rows(&rows, vec![0; values.len()]).unwrap()
    }

    #[test]
    fn analytic_z_scores() {
        let (s, scaler) = standardize(&col(&[1.0, 2.0, 3.0])).unwrap();
        let expected = [-1.224744871391589, 0.0, 1.224744871391589];
        for (got, want) in s.column(0).iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
        assert_eq!(scaler.zero_variance, vec![false]);
    }

    #[test]
    fn constant_column_is_flagged() {
        let (s, scaler) = standardize(&col(&[5.0, 5.0, 5.0])).unwrap();
        assert_eq!(s.column(0), vec![0.0; 3]);
        assert_eq!(scaler.zero_variance, vec![true]);
    }

    #[test]
    fn columns_are_independent() {
        let a = [0.3, -1.0, 4.0, 2.5];
        let b = [10.0, 10.5, 9.0, 12.0];
        let rows: Vec<Vec<f64>> = a.iter().zip(&b).map(|(x, y)| vec![*x, *y]).collect();
        let (both, _) = standardize(&Dataset::from_rows(&rows, vec![0; 4]).unwrap()).unwrap();
        let (sa, _) = standardize(&col(&a)).unwrap();
        let (sb, _) = standardize(&col(&b)).unwrap();
        assert_eq!(both.column(0), sa.column(0));
        assert_eq!(both.column(1), sb.column(0));
    }

    #[test]
    fn empty_is_rejected() {
        let d = Dataset::from_rows(&[], vec![]).unwrap();
        assert!(matches!(standardize(&d), Err(DataError::Empty)));
    }

    proptest! {
        #[test]
        fn moments_and_idempotence(values in proptest::collection::vec(-1e3f64..1e3, 2..40)) {
            let (once, scaler) = standardize(&col(&values)).unwrap();
            let c = once.column(0);
            if !scaler.zero_variance[0] {
                let n = c.len() as f64;
                let mean = c.iter().sum::<f64>() / n;
                let var = c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                prop_assert!(mean.abs() < 1e-9);
                prop_assert!((var - 1.0).abs() < 1e-9);
            }
            let (twice, _) = standardize(&once).unwrap();
            for (a, b) in c.iter().zip(twice.column(0)) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
