use std::cmp::Ordering;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::knn::euclidean;
use super::NeighborhoodError;
use crate::data::{Dataset, RowId};

/// Row cap for spanning-tree construction; larger sets are subsampled.
pub const MST_MAX_ROWS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MstEdge {
    pub a: RowId,
    pub b: RowId,
    pub distance: f64,
}

/// Euclidean minimum spanning tree. Node `i` is row `positions[i]` of the
/// dataset it was built from.
#[derive(Debug, Clone)]
pub struct MstGraph {
    n_features: usize,
    points: Vec<f64>,
    positions: Vec<usize>,
    row_ids: Vec<RowId>,
    labels: Vec<u8>,
    /// Node-index edges sorted by (distance, a, b).
    edges: Vec<(usize, usize, f64)>,
    adjacency: Vec<Vec<usize>>,
    sample_seed: Option<u64>,
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            Ordering::Less => self.parent[ra] = rb,
            Ordering::Greater => self.parent[rb] = ra,
            Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

fn edge_order(x: &(usize, usize, f64), y: &(usize, usize, f64)) -> Ordering {
    x.2.total_cmp(&y.2).then(x.0.cmp(&y.0)).then(x.1.cmp(&y.1))
}

fn check_size(d: &Dataset) -> Result<(), NeighborhoodError> {
    if d.n_rows() < 2 {
        return Err(NeighborhoodError::TooFewRows(d.n_rows()));
    }
    Ok(())
}

/// Dense Prim construction, O(n²) time and O(n) extra memory.
pub fn build_mst(d: &Dataset) -> Result<MstGraph, NeighborhoodError> {
    check_size(d)?;
    let positions: Vec<usize> = (0..d.n_rows()).collect();
    Ok(MstGraph::assemble(d, positions, prim(d), None))
}

/// Kruskal over all pairwise edges. O(n² log n); meant for cross-checking.
pub fn build_mst_kruskal(d: &Dataset) -> Result<MstGraph, NeighborhoodError> {
    check_size(d)?;
    let n = d.n_rows();
    let mut all = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            all.push((i, j, euclidean(d.row(i), d.row(j))));
        }
    }
    all.sort_by(edge_order);
    let mut uf = UnionFind::new(n);
    let edges = all.into_iter().filter(|&(a, b, _)| uf.union(a, b)).collect();
    Ok(MstGraph::assemble(d, (0..n).collect(), edges, None))
}

/// Tree over at most `max_rows` rows, drawn uniformly with `seed` when the
/// dataset is larger.
pub fn build_mst_sampled(d: &Dataset, max_rows: usize, seed: u64) -> Result<MstGraph, NeighborhoodError> {
    check_size(d)?;
    if d.n_rows() <= max_rows {
        return build_mst(d);
    }
    if max_rows < 2 {
        return Err(NeighborhoodError::TooFewRows(max_rows));
    }
    let mut positions = sample(&mut ChaCha8Rng::seed_from_u64(seed), d.n_rows(), max_rows).into_vec();
    positions.sort_unstable();
    let sub = d.subset(&positions);
    Ok(MstGraph::assemble(&sub, positions, prim(&sub), Some(seed)))
}

fn prim(d: &Dataset) -> Vec<(usize, usize, f64)> {
    let n = d.n_rows();
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut parent = vec![0usize; n];
    let mut edges = Vec::with_capacity(n - 1);
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        let x = d.row(current);
        let mut next = usize::MAX;
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let dist = euclidean(x, d.row(j));
            if dist < best[j] {
                best[j] = dist;
                parent[j] = current;
            }
            if next == usize::MAX || best[j] < best[next] {
                next = j;
            }
        }
        in_tree[next] = true;
        edges.push((parent[next].min(next), parent[next].max(next), best[next]));
        current = next;
    }
    edges
}

impl MstGraph {
    fn assemble(d: &Dataset, positions: Vec<usize>, mut edges: Vec<(usize, usize, f64)>, seed: Option<u64>) -> Self {
        edges.sort_by(edge_order);
        let mut adjacency = vec![Vec::new(); d.n_rows()];
        for &(a, b, _) in &edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        Self {
            n_features: d.n_features(),
            points: d.flat_features().to_vec(),
            positions,
            row_ids: d.row_ids().to_vec(),
            labels: d.labels().to_vec(),
            edges,
            adjacency,
            sample_seed: seed,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.row_ids.len()
    }

    pub fn edges(&self) -> Vec<MstEdge> {
        self.edges
            .iter()
            .map(|&(a, b, distance)| MstEdge {
                a: self.row_ids[a],
                b: self.row_ids[b],
                distance,
            })
            .collect()
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.2).sum()
    }

    /// Source-dataset position of every node.
    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn row_ids(&self) -> &[RowId] {
        &self.row_ids
    }

    /// Labels of the nodes, as given by the dataset the tree was built from.
    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn sample_seed(&self) -> Option<u64> {
        self.sample_seed
    }

    pub fn node_of(&self, id: RowId) -> Option<usize> {
        self.row_ids.iter().position(|&r| r == id)
    }

    pub fn neighbors_of(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    /// Fraction of tree neighbours of `id` whose label differs from its own.
    /// `labels` is indexed by node.
    pub fn mst_fraction(&self, labels: &[u8], id: RowId) -> Result<f64, NeighborhoodError> {
        let node = self.node_of(id).ok_or(NeighborhoodError::UnknownRow(id))?;
        let adj = &self.adjacency[node];
        let opp = adj.iter().filter(|&&j| labels[j] != labels[node]).count();
        Ok(opp as f64 / adj.len() as f64)
    }

    /// Nodes adjacent to an external point `x` in the spanning tree of the
    /// node set plus `x`. Uses the fact that this tree is the spanning tree
    /// of the current edges together with every edge incident to `x`.
    pub fn query_neighbors(&self, x: &[f64]) -> Result<Vec<usize>, NeighborhoodError> {
        if x.len() != self.n_features {
            return Err(NeighborhoodError::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        let n = self.n_nodes();
        let q = n;
        let mut spokes: Vec<(usize, usize, f64)> = (0..n)
            .map(|i| (i, q, euclidean(x, &self.points[i * self.n_features..(i + 1) * self.n_features])))
            .collect();
        spokes.sort_by(edge_order);
        let mut uf = UnionFind::new(n + 1);
        let mut out = Vec::new();
        let (mut ti, mut si) = (0, 0);
        // merge the two sorted lists; tree edges win distance ties
        while ti < self.edges.len() || si < spokes.len() {
            let take_tree = si >= spokes.len()
                || (ti < self.edges.len() && self.edges[ti].2 <= spokes[si].2);
            if take_tree {
                let (a, b, _) = self.edges[ti];
                uf.union(a, b);
                ti += 1;
            } else {
                let (a, b, _) = spokes[si];
                if uf.union(a, b) {
                    out.push(a);
                }
                si += 1;
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    /// Opponent fraction among the tree neighbours of an external point with
    /// label `label`; `labels` is indexed by node.
    pub fn query_fraction(&self, x: &[f64], label: u8, labels: &[u8]) -> Result<f64, NeighborhoodError> {
        let adj = self.query_neighbors(x)?;
        let opp = adj.iter().filter(|&&j| labels[j] != label).count();
        Ok(opp as f64 / adj.len() as f64)
    }

    /// Edge list as CSV with header `source,target,distance`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("source,target,distance\n");
        for e in self.edges() {
            s.push_str(&format!("{},{},{:?}\n", e.a, e.b, e.distance));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collinear_points() {
        let d = Dataset::from_rows(&[vec![0.0], vec![2.0], vec![1.0]], vec![0, 0, 1]).unwrap();
        let g = build_mst(&d).unwrap();
        let mut pairs: Vec<(u64, u64)> = g.edges().iter().map(|e| (e.a.0, e.b.0)).collect();
        pairs.sort();
        assert_eq!(pairs, vec![(0, 2), (1, 2)]);
        assert_eq!(g.total_weight(), 2.0);
        assert_eq!(g.mst_fraction(g.labels(), RowId(2)).unwrap(), 1.0);
        assert_eq!(g.mst_fraction(g.labels(), RowId(0)).unwrap(), 1.0);
    }

    #[test]
    fn duplicates_give_zero_edge() {
        let d = Dataset::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0], vec![3.0, 1.0]], vec![0, 1, 0]).unwrap();
        let g = build_mst(&d).unwrap();
        assert_eq!(g.edges().len(), 2);
        assert!(g.edges().iter().any(|e| e.distance == 0.0));
    }

    #[test]
    fn query_attaches_to_nearest_when_outside() {
        let d = Dataset::from_rows(&[vec![0.0], vec![1.0], vec![2.0]], vec![0, 0, 1]).unwrap();
        let g = build_mst(&d).unwrap();
        assert_eq!(g.query_neighbors(&[5.0]).unwrap(), vec![2]);
        // between nodes 0 and 1 the query splits that edge
        assert_eq!(g.query_neighbors(&[0.5]).unwrap(), vec![0, 1]);
        assert_eq!(g.query_fraction(&[5.0], 0, g.labels()).unwrap(), 1.0);
    }

    #[test]
    fn subsample_is_recorded() {
        let rows: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64]).collect();
        let d = Dataset::from_rows(&rows, vec![0; 50]).unwrap();
        let g = build_mst_sampled(&d, 10, 7).unwrap();
        assert_eq!(g.n_nodes(), 10);
        assert_eq!(g.sample_seed(), Some(7));
        assert!(build_mst_sampled(&d, 100, 7).unwrap().sample_seed().is_none());
        assert_eq!(g.to_csv().lines().count(), 10);
    }
}
