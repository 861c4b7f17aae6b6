use std::fmt;

use serde::{Deserialize, Serialize};

use super::tree::{MetaNode, MetaTree};
use crate::meta_features::{DiagnosisLabel, Feature, N_FEATURES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub feature: String,
    pub comparator: Comparator,
    pub threshold: f64,
}

impl Condition {
    fn feature(&self) -> Feature {
        Feature::from_name(&self.feature).expect("conditions are built from known features")
    }

    pub fn holds(&self, values: &[f64; N_FEATURES]) -> bool {
        let v = values[self.feature().index()];
        match self.comparator {
            Comparator::Le => v <= self.threshold,
            Comparator::Gt => v > self.threshold,
        }
    }
}

/// Display form with at most three decimals. Rule evaluation always uses
/// the exact threshold.
fn short(t: f64) -> String {
    let s = format!("{t:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.comparator {
            Comparator::Le => "<=",
            Comparator::Gt => ">",
        };
        write!(f, "({}{}{})", self.feature, op, short(self.threshold))
    }
}

/// Root-to-leaf path with per-feature intervals merged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRule {
    pub conditions: Vec<Condition>,
    pub label: DiagnosisLabel,
    /// Training profiles reaching the leaf.
    pub support: usize,
    /// Share of the leaf's training profiles carrying `label`.
    pub confidence: f64,
    pub leaf: usize,
}

impl DecisionRule {
    pub fn matches(&self, values: &[f64; N_FEATURES]) -> bool {
        self.conditions.iter().all(|c| c.holds(values))
    }
}

impl fmt::Display for DecisionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.label.code())?;
        if self.conditions.is_empty() {
            return f.write_str("(always)");
        }
        let parts: Vec<String> = self.conditions.iter().map(|c| c.to_string()).collect();
        f.write_str(&parts.join("&"))
    }
}

/// One rule per leaf with at least `min_support` training profiles, sorted
/// by support (descending), then leaf index.
pub fn extract_rules(tree: &MetaTree, min_support: usize) -> Vec<DecisionRule> {
    let mut rules = Vec::new();
    // per feature: (greatest lower bound from ">" branches, least upper bound from "<=")
    let bounds = vec![(None::<f64>, None::<f64>); N_FEATURES];
    walk(tree, 0, bounds, &mut rules);
    rules.retain(|r| r.support >= min_support);
    rules.sort_by(|a, b| b.support.cmp(&a.support).then(a.leaf.cmp(&b.leaf)));
    rules
}

fn walk(tree: &MetaTree, i: usize, bounds: Vec<(Option<f64>, Option<f64>)>, out: &mut Vec<DecisionRule>) {
    match &tree.nodes[i] {
        MetaNode::Leaf { counts, label } => {
            let support: usize = counts.iter().sum();
            let mut conditions = Vec::new();
            for (j, (lo, hi)) in bounds.iter().enumerate() {
                let name = Feature::ALL[j].display().to_string();
                if let Some(t) = lo {
                    conditions.push(Condition {
                        feature: name.clone(),
                        comparator: Comparator::Gt,
                        threshold: *t,
                    });
                }
                if let Some(t) = hi {
                    conditions.push(Condition {
                        feature: name,
                        comparator: Comparator::Le,
                        threshold: *t,
                    });
                }
            }
            out.push(DecisionRule {
                conditions,
                label: *label,
                support,
                confidence: if support == 0 {
                    0.0
                } else {
                    counts[label.index()] as f64 / support as f64
                },
                leaf: i,
            });
        }
        MetaNode::Split {
            feature,
            threshold,
            left,
            right,
            ..
        } => {
            let mut lb = bounds.clone();
            lb[*feature].1 = Some(lb[*feature].1.map_or(*threshold, |h| h.min(*threshold)));
            walk(tree, *left, lb, out);
            let mut rb = bounds;
            rb[*feature].0 = Some(rb[*feature].0.map_or(*threshold, |l| l.max(*threshold)));
            walk(tree, *right, rb, out);
        }
    }
}

/// Total Gini decrease per feature, normalized to sum to 1, in feature
/// order. All zeros for a tree without splits.
pub fn feature_importance(tree: &MetaTree) -> Vec<(Feature, f64)> {
    let mut imp = [0.0; N_FEATURES];
    for n in &tree.nodes {
        if let MetaNode::Split {
            feature,
            impurity_decrease,
            ..
        } = n
        {
            imp[*feature] += impurity_decrease;
        }
    }
    let total: f64 = imp.iter().sum();
    Feature::ALL
        .iter()
        .map(|&f| (f, if total > 0.0 { imp[f.index()] / total } else { 0.0 }))
        .collect()
}
