use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::MetaError;
use crate::label_gen::LabeledPool;
use crate::meta_features::{DiagnosisLabel, Feature, N_FEATURES};
use crate::models::split_point;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    pub max_depth: usize,
    /// Fewest training profiles allowed in a leaf.
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 18,
            min_leaf: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetaNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        n_samples: usize,
        /// Weighted Gini decrease of this split, as a fraction of the root size.
        impurity_decrease: f64,
    },
    Leaf {
        /// Training counts per label, indexed by [`DiagnosisLabel::index`].
        counts: [usize; 3],
        label: DiagnosisLabel,
    },
}

/// Node 0 is the root. Values equal to a threshold go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaTree {
    pub nodes: Vec<MetaNode>,
    pub feature_names: Vec<String>,
    pub params: TreeParams,
    pub seed: u64,
    pub depth: usize,
    pub n_leaves: usize,
    pub n_train: usize,
}

/// Argmax with ties to the first index (alphabetical label order).
pub(crate) fn majority(counts: &[usize; 3]) -> DiagnosisLabel {
    let mut best = 0;
    for i in 1..3 {
        if counts[i] > counts[best] {
            best = i;
        }
    }
    DiagnosisLabel::ALL[best]
}

fn gini(counts: &[usize; 3], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    1.0 - counts.iter().map(|&c| (c as f64 / n as f64).powi(2)).sum::<f64>()
}

struct Builder<'a> {
    x: &'a [[f64; N_FEATURES]],
    y: &'a [usize],
    params: TreeParams,
    feature_order: Vec<usize>,
    n_root: usize,
    nodes: Vec<MetaNode>,
}

impl Builder<'_> {
    fn counts(&self, rows: &[usize]) -> [usize; 3] {
        let mut c = [0; 3];
        rows.iter().for_each(|&i| c[self.y[i]] += 1);
        c
    }

    fn build(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let counts = self.counts(&rows);
        self.nodes.push(MetaNode::Leaf {
            counts,
            label: majority(&counts),
        });
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.params.max_depth || rows.len() < 2 * self.params.min_leaf {
            return id;
        }
        let Some((feature, threshold, decrease)) = self.best_split(&rows, &counts) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| self.x[i][feature] <= threshold);
        let n = rows.len();
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[id] = MetaNode::Split {
            feature,
            threshold,
            left,
            right,
            n_samples: n,
            impurity_decrease: decrease,
        };
        id
    }

    /// Best (feature, threshold, weighted decrease). Impurities are computed
    /// from count ratios so that scaling every count leaves them unchanged.
    fn best_split(&self, rows: &[usize], counts: &[usize; 3]) -> Option<(usize, f64, f64)> {
        let n = rows.len();
        let parent = gini(counts, n);
        let min_leaf = self.params.min_leaf.max(1);
        let mut best: Option<(usize, f64, f64)> = None;
        let mut sorted = rows.to_vec();
        for &j in &self.feature_order {
            sorted.sort_by(|&a, &b| self.x[a][j].total_cmp(&self.x[b][j]));
            let mut left = [0usize; 3];
            for k in 0..n - 1 {
                left[self.y[sorted[k]]] += 1;
                let n_left = k + 1;
                let (lo, hi) = (self.x[sorted[k]][j], self.x[sorted[k + 1]][j]);
                if lo >= hi || n_left < min_leaf || n - n_left < min_leaf {
                    continue;
                }
                let right = [counts[0] - left[0], counts[1] - left[1], counts[2] - left[2]];
                let n_right = n - n_left;
                let child = n_left as f64 / n as f64 * gini(&left, n_left)
                    + n_right as f64 / n as f64 * gini(&right, n_right);
                let gain = parent - child;
                if gain > 1e-12 && best.is_none_or(|b| gain > b.2) {
                    best = Some((j, split_point(lo, hi), gain));
                }
            }
        }
        best.map(|(j, t, gain)| (j, t, gain * n as f64 / self.n_root as f64))
    }
}

/// CART with Gini impurity. `seed` fixes the order in which features are
/// scanned, which decides between equally good splits.
pub fn train_tree(pool: &LabeledPool, params: &TreeParams, seed: u64) -> Result<MetaTree, MetaError> {
    if params.max_depth == 0 {
        return Err(MetaError::InvalidParams("max_depth must be at least 1".into()));
    }
    let (x, y) = super::experiment::pool_matrix(pool)?;
    if x.is_empty() {
        return Err(MetaError::EmptyPool);
    }
    let mut feature_order: Vec<usize> = (0..N_FEATURES).collect();
    feature_order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut b = Builder {
        x: &x,
        y: &y,
        params: *params,
        feature_order,
        n_root: x.len(),
        nodes: Vec::new(),
    };
    b.build((0..x.len()).collect(), 0);
    let nodes = b.nodes;
    let mut tree = MetaTree {
        n_leaves: nodes.iter().filter(|n| matches!(n, MetaNode::Leaf { .. })).count(),
        nodes,
        feature_names: Feature::ALL.iter().map(|f| f.display().to_string()).collect(),
        params: *params,
        seed,
        depth: 0,
        n_train: x.len(),
    };
    tree.depth = tree.node_depth(0);
    Ok(tree)
}

impl MetaTree {
    fn node_depth(&self, i: usize) -> usize {
        match &self.nodes[i] {
            MetaNode::Leaf { .. } => 0,
            MetaNode::Split { left, right, .. } => 1 + self.node_depth(*left).max(self.node_depth(*right)),
        }
    }

    /// Index of the leaf reached by `values`.
    pub fn leaf_of(&self, values: &[f64; N_FEATURES]) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                MetaNode::Leaf { .. } => return i,
                MetaNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if values[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn predict_values(&self, values: &[f64; N_FEATURES]) -> Result<DiagnosisLabel, MetaError> {
        if let Some((j, &v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(MetaError::NonFinite {
                feature: Feature::ALL[j].name().to_string(),
                value: v,
            });
        }
        match &self.nodes[self.leaf_of(values)] {
            MetaNode::Leaf { label, .. } => Ok(*label),
            MetaNode::Split { .. } => unreachable!("leaf_of returns leaves"),
        }
    }

    pub fn predict(&self, profile: &crate::meta_features::ProfileVector) -> Result<DiagnosisLabel, MetaError> {
        self.predict_values(&profile.values)
    }

    pub fn to_json(&self) -> Result<String, MetaError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self, MetaError> {
        Ok(serde_json::from_str(s)?)
    }
}
