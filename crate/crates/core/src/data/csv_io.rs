use std::fs;
use std::io::Write;
use std::path::Path;

use super::{DataError, Dataset, RowId};

const MISSING_TOKENS: &[&str] = &["", "na", "nan", "n/a", "null", "?", "none"];

/// Result of reading a CSV file: the dataset plus the number of rows dropped
/// because one of their cells was missing.
#[derive(Debug, Clone)]
pub struct LoadedCsv {
    pub dataset: Dataset,
    pub dropped_rows: usize,
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// Column holding explicit row ids. Without it, ids are the 0-based data
    /// line numbers, so dropped rows leave gaps.
    pub id_column: Option<String>,
}

pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<LoadedCsv, DataError> {
    load_csv_with(path, label_column, &LoadOptions::default())
}

pub fn load_csv_with(
    path: impl AsRef<Path>,
    label_column: &str,
    options: &LoadOptions,
) -> Result<LoadedCsv, DataError> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(DataError::MissingFile(path.display().to_string()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let label_idx =
        find(label_column).ok_or_else(|| DataError::MissingColumn(label_column.to_string()))?;
    let id_idx = match &options.id_column {
        Some(name) => Some(find(name).ok_or_else(|| DataError::MissingColumn(name.clone()))?),
        None => None,
    };
    let feature_cols: Vec<usize> = (0..headers.len())
        .filter(|&j| j != label_idx && Some(j) != id_idx)
        .collect();
    let feature_names = feature_cols.iter().map(|&j| headers[j].to_string()).collect();

    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut row_ids = Vec::new();
    let mut dropped = 0;
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let missing = |s: &str| MISSING_TOKENS.contains(&s.to_ascii_lowercase().as_str());
        if record.iter().any(missing) {
            dropped += 1;
            continue;
        }
        let raw_label = &record[label_idx];
        let label = match raw_label.parse::<f64>() {
            Ok(v) if v == 0.0 => 0,
            Ok(v) if v == 1.0 => 1,
            _ => {
                return Err(DataError::NonBinaryLabel {
                    row: line,
                    value: raw_label.to_string(),
                })
            }
        };
        let mut row = Vec::with_capacity(feature_cols.len());
        for &j in &feature_cols {
            let cell = &record[j];
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => row.push(v),
                _ => {
                    return Err(DataError::NotNumeric {
                        line,
                        column: headers[j].to_string(),
                        value: cell.to_string(),
                    })
                }
            }
        }
        let id = match id_idx {
            Some(j) => RowId(record[j].parse().map_err(|_| DataError::NotNumeric {
                line,
                column: headers[j].to_string(),
                value: record[j].to_string(),
            })?),
            None => RowId(line as u64),
        };
        features.extend(row);
        labels.push(label);
        row_ids.push(id);
    }
    if labels.is_empty() {
        return Err(DataError::AllRowsDropped { dropped });
    }
    if dropped > 0 {
        log::info!("{}: dropped {dropped} rows with missing values", path.display());
    }
    let dataset = Dataset::from_flat(
        features,
        feature_cols.len(),
        labels,
        row_ids,
        feature_names,
    )?;
    Ok(LoadedCsv {
        dataset,
        dropped_rows: dropped,
    })
}

/// Serializes a dataset as CSV with a leading `row_id` column and a trailing
/// `label` column. `comment`, when given, is written first as `# comment`.
pub fn dataset_to_csv(d: &Dataset, comment: Option<&str>) -> Result<Vec<u8>, DataError> {
    let mut out = Vec::new();
    if let Some(c) = comment {
        writeln!(out, "# {c}")?;
    }
    {
        let mut w = csv::Writer::from_writer(&mut out);
        let mut header = vec!["row_id".to_string()];
        header.extend(d.feature_names().iter().cloned());
        header.push("label".into());
        w.write_record(&header)?;
        for i in 0..d.n_rows() {
            let mut rec = vec![d.row_id(i).to_string()];
            rec.extend(d.row(i).iter().map(|v| format!("{v:?}")));
            rec.push(d.label(i).to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
    }
    Ok(out)
}

/// Reads a dataset written by [`dataset_to_csv`].
pub fn read_dataset_csv(path: impl AsRef<Path>) -> Result<Dataset, DataError> {
    let options = LoadOptions {
        id_column: Some("row_id".into()),
    };
    Ok(load_csv_with(path, "label", &options)?.dataset)
}

/// Writes `bytes` to `path` through a temporary sibling file and a rename.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> std::io::Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn single_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "one.csv", "a,b,y\n1.5,2,0\n");
        let loaded = load_csv(&p, "y").unwrap();
        assert_eq!(loaded.dataset.n_rows(), 1);
        assert_eq!(loaded.dataset.feature_names(), &["a", "b"]);
        assert_eq!(loaded.dataset.row(0), &[1.5, 2.0]);
    }

    #[test]
    fn non_binary_label_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "bad.csv", "a,y\n1,0\n2,2\n");
        let err = load_csv(&p, "y").unwrap_err();
        assert!(err.to_string().contains("non-binary label"), "{err}");
    }

    #[test]
    fn missing_values_are_dropped_and_counted() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "na.csv", "a,b,y\n1,,0\n2,3,1\nNA,1,0\n4,5,0\n");
        let loaded = load_csv(&p, "y").unwrap();
        assert_eq!(loaded.dropped_rows, 2);
        assert_eq!(loaded.dataset.row_ids(), &[RowId(1), RowId(3)]);

        let p = write(&dir, "allna.csv", "a,y\n,0\n?,1\n");
        assert!(matches!(
            load_csv(&p, "y").unwrap_err(),
            DataError::AllRowsDropped { dropped: 2 }
        ));
    }

    #[test]
    fn missing_file_and_column() {
        assert!(matches!(
            load_csv("/nonexistent/x.csv", "y").unwrap_err(),
            DataError::MissingFile(_)
        ));
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "a,b\n1,0\n");
        assert!(matches!(load_csv(&p, "y").unwrap_err(), DataError::MissingColumn(_)));
    }

    #[test]
    fn dataset_csv_round_trip_keeps_ids() {
        let d = Dataset::from_flat(
            vec![0.1, -2.5, 3.0, 1e-17],
            2,
            vec![1, 0],
            vec![RowId(40), RowId(7)],
            vec!["f".into(), "g".into()],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        write_atomic(&p, &dataset_to_csv(&d, Some("config_hash=abc")).unwrap()).unwrap();
        assert_eq!(read_dataset_csv(&p).unwrap(), d);
    }
}
