//! Gradient-boosted regression trees on the logistic loss.
//!
//! Each round fits a least-squares tree to the residuals `y - p` (labels as
//! class-1 indicators) and sets every leaf to a single Newton step,
//! `lr * Σr / (Σp(1-p) + λ)`. Raw scores are log-odds of class 1.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::data::Dataset;

const LEAF_L2: f64 = 1.0;
const MIN_GAIN: f64 = 1e-12;
/// Smallest hessian sum allowed in a child, as in common boosting libraries.
const MIN_CHILD_HESSIAN: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_learning_rate() -> f64 {
    0.3
}

impl GbtConfig {
    pub fn new(n_trees: usize, max_depth: usize) -> Self {
        Self {
            n_trees,
            max_depth,
            learning_rate: default_learning_rate(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.n_trees == 0 || self.max_depth == 0 {
            return Err(ModelError::InvalidConfig(format!(
                "GBT needs n_trees >= 1 and max_depth >= 1, got {} trees of depth {}",
                self.n_trees, self.max_depth
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(ModelError::InvalidConfig(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// One regression tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<TreeNode>,
}

impl RegressionTree {
    /// Index of the leaf node reached by `x` (values equal to a threshold go left).
    pub fn leaf_of(&self, x: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Leaf { .. } => return i,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self.nodes[self.leaf_of(x)] {
            TreeNode::Leaf { value } => value,
            TreeNode::Split { .. } => unreachable!("leaf_of returns leaves"),
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match &nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub base_score: f64,
    pub trees: Vec<RegressionTree>,
}

impl GbtModel {
    pub fn raw_score(&self, x: &[f64]) -> f64 {
        self.base_score + self.trees.iter().map(|t| t.value(x)).sum::<f64>()
    }

    /// Leaf node index per tree.
    pub fn leaf_signature(&self, x: &[f64]) -> Vec<usize> {
        self.trees.iter().map(|t| t.leaf_of(x)).collect()
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn fit(d: &Dataset, cfg: &GbtConfig) -> Result<GbtModel, ModelError> {
    cfg.validate()?;
    let n = d.n_rows();
    let p = d.n_features();
    let y: Vec<f64> = d.labels().iter().map(|&l| f64::from(l)).collect();
    let pos = y.iter().sum::<f64>() / n as f64;
    let base_score = (pos / (1.0 - pos)).ln();

    let presorted: Vec<Vec<usize>> = (0..p)
        .map(|j| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| d.row(a)[j].total_cmp(&d.row(b)[j]).then(a.cmp(&b)));
            idx
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut scores = vec![base_score; n];
    let mut trees = Vec::with_capacity(cfg.n_trees);
    for _ in 0..cfg.n_trees {
        let prob: Vec<f64> = scores.iter().map(|&s| sigmoid(s)).collect();
        let grower = Grower {
            data: d,
            residual: y.iter().zip(&prob).map(|(y, p)| y - p).collect(),
            hessian: prob.iter().map(|p| p * (1.0 - p)).collect(),
            max_depth: cfg.max_depth,
            learning_rate: cfg.learning_rate,
            feature_order: {
                let mut order: Vec<usize> = (0..p).collect();
                order.shuffle(&mut rng);
                order
            },
        };
        let tree = grower.grow(presorted.clone());
        for (i, s) in scores.iter_mut().enumerate() {
            *s += tree.value(d.row(i));
        }
        trees.push(tree);
    }
    Ok(GbtModel { base_score, trees })
}

struct Grower<'a> {
    data: &'a Dataset,
    residual: Vec<f64>,
    hessian: Vec<f64>,
    max_depth: usize,
    learning_rate: f64,
    feature_order: Vec<usize>,
}

struct BestSplit {
    gain: f64,
    feature: usize,
    threshold: f64,
}

impl Grower<'_> {
    fn grow(&self, sorted: Vec<Vec<usize>>) -> RegressionTree {
        let mut nodes = Vec::new();
        self.build(&mut nodes, sorted, 0);
        RegressionTree { nodes }
    }

    /// `sorted[j]` holds this node's rows ordered by feature j.
    fn build(&self, nodes: &mut Vec<TreeNode>, sorted: Vec<Vec<usize>>, depth: usize) -> usize {
        let id = nodes.len();
        nodes.push(TreeNode::Leaf { value: 0.0 });
        let rows = &sorted[0];
        let sum_r: f64 = rows.iter().map(|&i| self.residual[i]).sum();
        let sum_h: f64 = rows.iter().map(|&i| self.hessian[i]).sum();
        let split = if depth < self.max_depth && rows.len() >= 2 {
            self.best_split(&sorted, sum_r, sum_h)
        } else {
            None
        };
        let Some(split) = split else {
            nodes[id] = TreeNode::Leaf {
                value: self.learning_rate * sum_r / (sum_h + LEAF_L2),
            };
            return id;
        };
        let goes_left = |i: usize| self.data.row(i)[split.feature] <= split.threshold;
        let (left_sorted, right_sorted): (Vec<Vec<usize>>, Vec<Vec<usize>>) = sorted
            .into_iter()
            .map(|list| list.into_iter().partition(|&i| goes_left(i)))
            .unzip();
        let left = self.build(nodes, left_sorted, depth + 1);
        let right = self.build(nodes, right_sorted, depth + 1);
        nodes[id] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }

    fn best_split(&self, sorted: &[Vec<usize>], sum_r: f64, sum_h: f64) -> Option<BestSplit> {
        let n = sorted[0].len() as f64;
        let parent = sum_r * sum_r / n;
        let mut best: Option<BestSplit> = None;
        for &j in &self.feature_order {
            let list = &sorted[j];
            let mut left_sum = 0.0;
            let mut left_h = 0.0;
            for k in 0..list.len() - 1 {
                left_sum += self.residual[list[k]];
                left_h += self.hessian[list[k]];
                let lo = self.data.row(list[k])[j];
                let hi = self.data.row(list[k + 1])[j];
                if lo >= hi || left_h < MIN_CHILD_HESSIAN || sum_h - left_h < MIN_CHILD_HESSIAN {
                    continue;
                }
                let n_left = (k + 1) as f64;
                let right_sum = sum_r - left_sum;
                let gain = left_sum * left_sum / n_left + right_sum * right_sum / (n - n_left) - parent;
                if gain > MIN_GAIN && best.as_ref().is_none_or(|b| gain > b.gain) {
                    best = Some(BestSplit {
                        gain,
                        feature: j,
                        threshold: split_point(lo, hi),
                    });
                }
            }
        }
        best
    }
}

/// A threshold `t` with `lo <= t < hi`.
pub(crate) fn split_point(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid < hi {
        mid
    } else {
        lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_point_between_adjacent_floats() {
        let lo = 1.0_f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        let t = split_point(lo, hi);
        assert!(lo <= t && t < hi);
        assert_eq!(split_point(0.0, 2.0), 1.0);
    }

    #[test]
    fn trees_respect_depth() {
        let rows: Vec<Vec<f64>> = (0..64).map(|i| vec![(i % 8) as f64, (i / 8) as f64]).collect();
        let labels = (0..64).map(|i| ((i % 8 + i / 8) % 2) as u8).collect();
        let d = Dataset::from_rows(&rows, labels).unwrap();
        for depth in 1..4 {
            let m = fit(&d, &GbtConfig::new(5, depth)).unwrap();
            assert_eq!(m.trees.len(), 5);
            assert!(m.trees.iter().all(|t| t.depth() <= depth));
        }
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_eq!(sigmoid(1000.0), 1.0);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
    }
}
