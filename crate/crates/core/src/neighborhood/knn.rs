use crate::data::{Dataset, RowId};

use super::NeighborhoodError;

/// Neighbourhood size for a reference set of `n_rows`: `max(5, ⌊0.05·n⌋)`.
pub fn default_k(n_rows: usize) -> usize {
    (n_rows / 20).max(5)
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub row_id: RowId,
    /// Row position inside the indexed dataset.
    pub position: usize,
    pub distance: f64,
}

/// Neighbours ordered by ascending distance, ties by ascending row id.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborSet {
    pub k: usize,
    pub neighbors: Vec<Neighbor>,
}

impl NeighborSet {
    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Neighbor> {
        self.neighbors.iter()
    }

    pub fn positions(&self) -> Vec<usize> {
        self.neighbors.iter().map(|n| n.position).collect()
    }
}

/// Brute-force exact index over a borrowed dataset.
#[derive(Debug, Clone, Copy)]
pub struct KnnIndex<'a> {
    data: &'a Dataset,
}

impl<'a> KnnIndex<'a> {
    pub fn new(data: &'a Dataset) -> Result<Self, NeighborhoodError> {
        if data.is_empty() {
            return Err(NeighborhoodError::Empty);
        }
        Ok(Self { data })
    }

    pub fn data(&self) -> &'a Dataset {
        self.data
    }

    /// The K nearest rows to an external point.
    pub fn query(&self, x: &[f64], k: usize) -> Result<NeighborSet, NeighborhoodError> {
        self.query_excluding(x, k, None)
    }

    /// The K nearest rows to member row `position`, never returning the row itself.
    pub fn query_member(&self, position: usize, k: usize) -> Result<NeighborSet, NeighborhoodError> {
        self.query_excluding(self.data.row(position), k, Some(position))
    }

    fn query_excluding(
        &self,
        x: &[f64],
        k: usize,
        exclude: Option<usize>,
    ) -> Result<NeighborSet, NeighborhoodError> {
        if k == 0 {
            return Err(NeighborhoodError::InvalidK(k));
        }
        let p = self.data.n_features();
        if x.len() != p {
            return Err(NeighborhoodError::DimensionMismatch {
                expected: p,
                got: x.len(),
            });
        }
        let mut all: Vec<Neighbor> = (0..self.data.n_rows())
            .filter(|&i| Some(i) != exclude)
            .map(|i| Neighbor {
                row_id: self.data.row_id(i),
                position: i,
                distance: euclidean(x, self.data.row(i)),
            })
            .collect();
        let order = |a: &Neighbor, b: &Neighbor| a.distance.total_cmp(&b.distance).then(a.row_id.cmp(&b.row_id));
        if all.len() > k {
            all.select_nth_unstable_by(k - 1, order);
            all.truncate(k);
        }
        all.sort_by(order);
        Ok(NeighborSet { k, neighbors: all })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_k_floor_and_minimum() {
        assert_eq!(default_k(1354), 67);
        assert_eq!(default_k(99), 5);
        assert_eq!(default_k(200), 10);
    }

    #[test]
    fn single_row_and_saturation() {
        let d = Dataset::from_rows(&[vec![1.0, 1.0]], vec![0]).unwrap();
        let idx = KnnIndex::new(&d).unwrap();
        let s = idx.query(&[0.0, 0.0], 3).unwrap();
        assert_eq!(s.len(), 1);
        assert!((s.neighbors[0].distance - 2f64.sqrt()).abs() < 1e-15);
        assert!(idx.query_member(0, 3).unwrap().is_empty());
        assert!(matches!(idx.query(&[0.0, 0.0], 0), Err(NeighborhoodError::InvalidK(0))));
    }

    #[test]
    fn ties_go_to_lower_row_id() {
        let d = Dataset::from_rows(&[vec![1.0], vec![-1.0], vec![0.0]], vec![0, 1, 0]).unwrap();
        let idx = KnnIndex::new(&d).unwrap();
        let s = idx.query_member(2, 2).unwrap();
        let ids: Vec<u64> = s.iter().map(|n| n.row_id.0).collect();
        assert_eq!(ids, vec![0, 1]);
        let s = idx.query_member(2, 1).unwrap();
        assert_eq!(s.neighbors[0].row_id, RowId(0));
    }
}
