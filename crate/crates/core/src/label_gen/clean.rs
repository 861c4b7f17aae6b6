use serde::{Deserialize, Serialize};

use super::LabelGenError;
use crate::data::{split_random, Dataset};
use crate::models::ModelConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CleaningConfig {
    pub acc_threshold: f64,
    pub max_rounds: usize,
    /// Smallest dataset cleaning may leave behind; each class also needs at
    /// least two rows.
    pub min_rows: usize,
    pub seed: u64,
}

impl Default for CleaningConfig {
    fn default() -> Self {
        Self {
            acc_threshold: 0.999,
            max_rounds: 5,
            min_rows: 20,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleaningRound {
    pub round: usize,
    pub size_before: usize,
    pub size_after: usize,
    /// Accuracy of the model trained on the first half, measured on the second.
    pub acc_c1: f64,
    pub acc_c2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub rounds: Vec<CleaningRound>,
    pub converged: bool,
    pub final_dataset: Dataset,
}

impl CleaningReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("round,size_before,size_after,acc_c1,acc_c2\n");
        for r in &self.rounds {
            s.push_str(&format!(
                "{},{},{},{:?},{:?}\n",
                r.round, r.size_before, r.size_after, r.acc_c1, r.acc_c2
            ));
        }
        s
    }
}

/// Repeated cross-cleaning: split in halves, train one model per half, drop
/// every row the other half's model gets wrong, merge and repeat. Stops once
/// both cross-accuracies reach the threshold (that round's errors are still
/// removed) or after `max_rounds`.
pub fn clean_dataset(
    d: &Dataset,
    strong: &ModelConfig,
    cfg: &CleaningConfig,
) -> Result<CleaningReport, LabelGenError> {
    if !(cfg.acc_threshold > 0.5 && cfg.acc_threshold <= 1.0) {
        return Err(LabelGenError::BadThreshold(cfg.acc_threshold));
    }
    let mut current = d.clone();
    let mut rounds = Vec::new();
    let mut converged = false;
    for round in 1..=cfg.max_rounds {
        let halves = split_random(&current, 0.5, cfg.seed.wrapping_add(round as u64))?;
        let (d1, d2) = (&halves.part_a, &halves.part_b);
        let c1 = strong.train(d1)?;
        let c2 = strong.train(d2)?;
        let keep = |m: &crate::models::TrainedModel, part: &Dataset| -> Result<Vec<usize>, LabelGenError> {
            let p = m.predict_dataset(part)?;
            Ok((0..part.n_rows())
                .filter(|&i| crate::models::label_from_proba(p[i]) == part.label(i))
                .collect())
        };
        let keep1 = keep(&c2, d1)?;
        let keep2 = keep(&c1, d2)?;
        let acc_c1 = keep2.len() as f64 / d2.n_rows() as f64;
        let acc_c2 = keep1.len() as f64 / d1.n_rows() as f64;
        let merged = d1.subset(&keep1).concat(&d2.subset(&keep2))?;
        let order = sorted_by_id(&merged);
        let next = merged.subset(&order);
        log::info!(
            "cleaning round {round}: {} -> {} rows (cross acc {acc_c1:.4}, {acc_c2:.4})",
            current.n_rows(),
            next.n_rows()
        );
        rounds.push(CleaningRound {
            round,
            size_before: current.n_rows(),
            size_after: next.n_rows(),
            acc_c1,
            acc_c2,
        });
        current = next;
        let counts = current.class_counts();
        if current.n_rows() < cfg.min_rows || counts.iter().any(|&c| c < 2) {
            return Err(LabelGenError::Collapsed {
                rows: current.n_rows(),
                counts,
                floor: cfg.min_rows,
                report: Box::new(CleaningReport {
                    rounds,
                    converged: false,
                    final_dataset: current,
                }),
            });
        }
        if acc_c1 >= cfg.acc_threshold && acc_c2 >= cfg.acc_threshold {
            converged = true;
            break;
        }
    }
    Ok(CleaningReport {
        rounds,
        converged,
        final_dataset: current,
    })
}

fn sorted_by_id(d: &Dataset) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..d.n_rows()).collect();
    idx.sort_by_key(|&i| d.row_id(i));
    idx
}
