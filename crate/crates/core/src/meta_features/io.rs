use serde::{Deserialize, Serialize};

use super::{DiagnosisLabel, ProfileError, ProfileVector, FEATURE_NAMES, N_FEATURES};
use crate::data::RowId;

/// Context stored next to a set of profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileMetadata {
    pub dataset: String,
    pub family: String,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileFile {
    pub metadata: ProfileMetadata,
    pub feature_names: Vec<String>,
    pub profiles: Vec<ProfileVector>,
}

impl ProfileFile {
    pub fn new(metadata: ProfileMetadata, profiles: Vec<ProfileVector>) -> Self {
        Self {
            metadata,
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            profiles,
        }
    }
}

/// Columns: `row_id`, the feature names in [`FEATURE_NAMES`] order,
/// `lsc_no_opponent`, `label` (empty when unlabelled).
pub fn profiles_to_csv(profiles: &[ProfileVector], comment: Option<&str>) -> Result<Vec<u8>, ProfileError> {
    let mut out = Vec::new();
    if let Some(c) = comment {
        out.extend_from_slice(format!("# {c}\n").as_bytes());
    }
    let mut w = csv::Writer::from_writer(&mut out);
    let mut header = vec!["row_id".to_string()];
    header.extend(FEATURE_NAMES.iter().map(|s| s.to_string()));
    header.push("lsc_no_opponent".into());
    header.push("label".into());
    w.write_record(&header)?;
    for p in profiles {
        let mut rec = vec![p.row_id.to_string()];
        rec.extend(p.values.iter().map(|v| format!("{v:?}")));
        rec.push(p.lsc_no_opponent.to_string());
        rec.push(p.label.map(|l| l.name().to_string()).unwrap_or_default());
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    drop(w);
    Ok(out)
}

pub fn profiles_from_csv(bytes: &[u8]) -> Result<Vec<ProfileVector>, ProfileError> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(bytes);
    let header = r.headers()?.clone();
    let expected = N_FEATURES + 3;
    if header.len() != expected || &header[0] != "row_id" || (0..N_FEATURES).any(|j| header[j + 1] != *FEATURE_NAMES[j]) {
        return Err(ProfileError::Format("unexpected profile header".into()));
    }
    let bad = |line: usize, what: &str| ProfileError::Format(format!("line {line}: bad {what}"));
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let row_id = rec[0].parse().map_err(|_| bad(line, "row_id"))?;
        let mut values = [0.0; N_FEATURES];
        for (j, v) in values.iter_mut().enumerate() {
            *v = rec[j + 1].parse().map_err(|_| bad(line, FEATURE_NAMES[j]))?;
        }
        let lsc_no_opponent = rec[N_FEATURES + 1].parse().map_err(|_| bad(line, "lsc_no_opponent"))?;
        let label = match &rec[N_FEATURES + 2] {
            "" => None,
            s => Some(s.parse::<DiagnosisLabel>()?),
        };
        out.push(ProfileVector {
            row_id: RowId(row_id),
            values,
            lsc_no_opponent,
            label,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let mut values = [0.25; N_FEATURES];
        values[14] = -1.0;
        values[3] = 0.1 + 0.2;
        let ps = vec![
            ProfileVector {
                row_id: RowId(4),
                values,
                lsc_no_opponent: false,
                label: Some(DiagnosisLabel::WeakModel),
            },
            ProfileVector {
                row_id: RowId(9),
                values,
                lsc_no_opponent: true,
                label: None,
            },
        ];
        let bytes = profiles_to_csv(&ps, Some("hash abc")).unwrap();
        assert_eq!(profiles_from_csv(&bytes).unwrap(), ps);
    }
}
