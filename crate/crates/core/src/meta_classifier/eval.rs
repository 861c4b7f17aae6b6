use serde::{Deserialize, Serialize};

use super::tree::MetaTree;
use super::MetaError;
use crate::label_gen::LabeledPool;
use crate::meta_features::DiagnosisLabel;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub configuration: String,
    pub seed: u64,
    /// Which part of the pools was used for training / testing.
    pub train: String,
    pub test: String,
    pub n_train: usize,
    pub tree_depth: usize,
    pub tree_leaves: usize,
}

/// Per-class scores indexed by [`DiagnosisLabel::index`]. A class never
/// predicted has precision 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub precision: [f64; 3],
    pub recall: [f64; 3],
    /// `confusion[true][predicted]`.
    pub confusion: [[usize; 3]; 3],
    pub accuracy: f64,
    pub n_test: usize,
    pub meta: RunMeta,
}

impl EvalReport {
    pub fn from_confusion(confusion: [[usize; 3]; 3], meta: RunMeta) -> Self {
        let n_test: usize = confusion.iter().flatten().sum();
        let mut precision = [0.0; 3];
        let mut recall = [0.0; 3];
        for c in 0..3 {
            let tp = confusion[c][c];
            let predicted: usize = (0..3).map(|t| confusion[t][c]).sum();
            let actual: usize = confusion[c].iter().sum();
            precision[c] = if predicted == 0 { 0.0 } else { tp as f64 / predicted as f64 };
            recall[c] = if actual == 0 { 0.0 } else { tp as f64 / actual as f64 };
        }
        let correct: usize = (0..3).map(|c| confusion[c][c]).sum();
        Self {
            precision,
            recall,
            confusion,
            accuracy: if n_test == 0 { 0.0 } else { correct as f64 / n_test as f64 },
            n_test,
            meta,
        }
    }

    pub fn macro_precision(&self) -> f64 {
        self.precision.iter().sum::<f64>() / 3.0
    }

    pub fn macro_recall(&self) -> f64 {
        self.recall.iter().sum::<f64>() / 3.0
    }

    pub const CSV_HEADER: &'static str = "configuration,seed,train,test,n_train,n_test,tree_depth,tree_leaves,accuracy,\
precision_DataMixedUp,precision_GoodPrediction,precision_WeakModel,\
recall_DataMixedUp,recall_GoodPrediction,recall_WeakModel";

    pub fn csv_row(&self) -> String {
        let m = &self.meta;
        format!(
            "{},{},{},{},{},{},{},{},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            m.configuration,
            m.seed,
            m.train,
            m.test,
            m.n_train,
            self.n_test,
            m.tree_depth,
            m.tree_leaves,
            self.accuracy,
            self.precision[0],
            self.precision[1],
            self.precision[2],
            self.recall[0],
            self.recall[1],
            self.recall[2]
        )
    }
}

pub fn evaluate(tree: &MetaTree, test: &LabeledPool, meta: RunMeta) -> Result<EvalReport, MetaError> {
    if test.is_empty() {
        return Err(MetaError::EmptyPool);
    }
    let mut confusion = [[0usize; 3]; 3];
    for (i, p) in test.profiles.iter().enumerate() {
        let truth = p.label.ok_or(MetaError::Unlabelled(i))?;
        let pred = tree.predict(p)?;
        confusion[truth.index()][pred.index()] += 1;
    }
    Ok(EvalReport::from_confusion(confusion, meta))
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len().max(1) as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

impl std::fmt::Display for MeanStd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.3}±{:.3}", self.mean, self.std)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub n_runs: usize,
    pub labels: [DiagnosisLabel; 3],
    pub precision: [MeanStd; 3],
    pub recall: [MeanStd; 3],
    pub accuracy: MeanStd,
}

pub fn summarize(reports: &[EvalReport]) -> EvalSummary {
    let col = |f: &dyn Fn(&EvalReport) -> f64| MeanStd::of(&reports.iter().map(f).collect::<Vec<_>>());
    EvalSummary {
        n_runs: reports.len(),
        labels: DiagnosisLabel::ALL,
        precision: [0, 1, 2].map(|c| col(&|r| r.precision[c])),
        recall: [0, 1, 2].map(|c| col(&|r| r.recall[c])),
        accuracy: col(&|r| r.accuracy),
    }
}

impl std::fmt::Display for EvalSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let join = |v: &[MeanStd; 3]| v.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(", ");
        write!(
            f,
            "Prec: [{}] Rec: [{}] Acc: {} ({} runs; order {})",
            join(&self.precision),
            join(&self.recall),
            self.accuracy,
            self.n_runs,
            self.labels.map(|l| l.code()).join("/")
        )
    }
}
