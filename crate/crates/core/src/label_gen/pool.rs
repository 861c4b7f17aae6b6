use serde::{Deserialize, Serialize};

use super::LabelGenError;
use crate::meta_features::{DiagnosisLabel, ProfileVector};
use crate::models::Family;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    Weak,
    Cut,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub dataset: String,
    pub family: Family,
    pub generator: Generator,
    /// Description of the model under diagnosis.
    pub config: String,
}

/// Labelled profiles; `provenance[i]` describes `profiles[i]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LabeledPool {
    pub profiles: Vec<ProfileVector>,
    pub provenance: Vec<Provenance>,
}

impl LabeledPool {
    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    /// Counts indexed by [`DiagnosisLabel::index`]; unlabelled profiles are skipped.
    pub fn class_counts(&self) -> [usize; 3] {
        let mut c = [0; 3];
        for p in &self.profiles {
            if let Some(l) = p.label {
                c[l.index()] += 1;
            }
        }
        c
    }

    pub fn subset(&self, idx: &[usize]) -> LabeledPool {
        LabeledPool {
            profiles: idx.iter().map(|&i| self.profiles[i].clone()).collect(),
            provenance: idx.iter().map(|&i| self.provenance[i].clone()).collect(),
        }
    }

    /// Profiles whose provenance satisfies `keep`.
    pub fn filter(&self, keep: impl Fn(&Provenance) -> bool) -> LabeledPool {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep(&self.provenance[i])).collect();
        self.subset(&idx)
    }

    pub fn extend(&mut self, other: LabeledPool) {
        self.profiles.extend(other.profiles);
        self.provenance.extend(other.provenance);
    }

    /// Every profile labelled and provenance aligned.
    pub fn validate(&self) -> Result<(), LabelGenError> {
        if self.provenance.len() != self.profiles.len() {
            return Err(LabelGenError::Provenance {
                profiles: self.profiles.len(),
                provenance: self.provenance.len(),
            });
        }
        if self.profiles.iter().any(|p| p.label.is_none()) {
            return Err(LabelGenError::Profile(crate::meta_features::ProfileError::Format(
                "pool contains an unlabelled profile".into(),
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String, LabelGenError> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self, LabelGenError> {
        let pool: LabeledPool = serde_json::from_str(s)?;
        pool.validate()?;
        Ok(pool)
    }
}

/// Concatenates contributions; all three labels must be present.
pub fn build_pool(contributions: Vec<LabeledPool>) -> Result<LabeledPool, LabelGenError> {
    let mut pool = LabeledPool::default();
    for c in contributions {
        c.validate()?;
        pool.extend(c);
    }
    let counts = pool.class_counts();
    for l in DiagnosisLabel::ALL {
        if counts[l.index()] == 0 {
            return Err(LabelGenError::MissingClass(l));
        }
    }
    log::info!(
        "pool: {} profiles ({} {}, {} {}, {} {})",
        pool.len(),
        counts[0],
        DiagnosisLabel::ALL[0],
        counts[1],
        DiagnosisLabel::ALL[1],
        counts[2],
        DiagnosisLabel::ALL[2]
    );
    Ok(pool)
}
