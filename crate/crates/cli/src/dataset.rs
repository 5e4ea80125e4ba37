//! CSV dataset ingestion following the MoleculeNet convention: one SMILES
//! column plus one numeric column per task, with empty cells marking
//! missing labels.

use crate::PipelineError;
use funqg_core::smiles::{parse_smiles_with, ParseOptions};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Classification,
    Regression,
}

#[derive(Debug, Clone)]
pub struct DatasetSpec {
    pub csv_path: PathBuf,
    pub smiles_column: String,
    pub target_columns: Vec<String>,
    pub task: TaskKind,
}

/// One usable dataset row.
#[derive(Debug, Clone)]
pub struct DataRecord {
    /// Original row number (0-based, excluding the header).
    pub row: usize,
    pub smiles: String,
    /// Targets with missing entries as 0.0 under a false mask.
    pub targets: Vec<f64>,
    pub mask: Vec<bool>,
    /// Fragments removed by the keep-largest policy, for logging.
    pub dropped_fragments: usize,
}

#[derive(Debug)]
pub struct LoadedDataset {
    pub records: Vec<DataRecord>,
    /// Rows dropped with the reason (unparseable SMILES).
    pub dropped: Vec<(usize, String)>,
    /// Non-empty cells that failed numeric parsing and were masked out.
    pub bad_cells: usize,
}

/// Loads and validates a dataset: rows whose SMILES fail to parse are
/// dropped and reported; empty target cells become masked entries.
pub fn load_dataset(
    spec: &DatasetSpec,
    parse_opts: ParseOptions,
) -> Result<LoadedDataset, PipelineError> {
    if spec.target_columns.is_empty() {
        return Err(PipelineError::MissingColumn("<no target columns>".into()));
    }
    let mut reader = csv::Reader::from_path(&spec.csv_path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| -> Result<usize, PipelineError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| PipelineError::MissingColumn(name.to_string()))
    };
    let smiles_idx = col(&spec.smiles_column)?;
    let target_idx: Vec<usize> = spec
        .target_columns
        .iter()
        .map(|c| col(c))
        .collect::<Result<_, _>>()?;

    let mut records = Vec::new();
    let mut dropped = Vec::new();
    let mut bad_cells = 0usize;
    for (row, result) in reader.records().enumerate() {
        let record = result?;
        let smiles = record.get(smiles_idx).unwrap_or("").trim().to_string();
        if smiles.is_empty() {
            dropped.push((row, "empty SMILES cell".to_string()));
            continue;
        }
        let parsed = match parse_smiles_with(&smiles, parse_opts) {
            Ok(p) => p,
            Err(e) => {
                dropped.push((row, e.to_string()));
                continue;
            }
        };
        let mut targets = Vec::with_capacity(target_idx.len());
        let mut mask = Vec::with_capacity(target_idx.len());
        for &ti in &target_idx {
            let cell = record.get(ti).unwrap_or("").trim();
            if cell.is_empty() {
                targets.push(0.0);
                mask.push(false);
            } else {
                match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => {
                        targets.push(v);
                        mask.push(true);
                    }
                    _ => {
                        bad_cells += 1;
                        targets.push(0.0);
                        mask.push(false);
                    }
                }
            }
        }
        records.push(DataRecord {
            row,
            smiles,
            targets,
            mask,
            dropped_fragments: parsed.dropped_fragments,
        });
    }
    if records.is_empty() {
        return Err(PipelineError::EmptyDataset);
    }
    Ok(LoadedDataset {
        records,
        dropped,
        bad_cells,
    })
}

/// Guesses the target columns of a CSV: every column other than the SMILES
/// column and obvious identifier columns whose non-empty cells (in the
/// first 100 rows) all parse as numbers.
pub fn infer_target_columns(
    path: &Path,
    smiles_column: &str,
) -> Result<Vec<String>, PipelineError> {
    const ID_COLUMNS: &[&str] = &["mol_id", "id", "ID", "Id", "name", "iupac", "compound_id"];
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let mut numeric = vec![true; headers.len()];
    let mut nonempty = vec![false; headers.len()];
    for result in reader.records().take(100) {
        let record = result?;
        for (i, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            if cell.is_empty() {
                continue;
            }
            nonempty[i] = true;
            if cell.parse::<f64>().is_err() {
                numeric[i] = false;
            }
        }
    }
    let targets: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, name)| {
            *name != smiles_column
                && !ID_COLUMNS.contains(name)
                && numeric[*i]
                && nonempty[*i]
        })
        .map(|(_, name)| name.to_string())
        .collect();
    if targets.is_empty() {
        return Err(PipelineError::MissingColumn(
            "<no numeric target columns detected>".into(),
        ));
    }
    Ok(targets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    fn spec(path: &Path, targets: &[&str], task: TaskKind) -> DatasetSpec {
        DatasetSpec {
            csv_path: path.to_path_buf(),
            smiles_column: "smiles".into(),
            target_columns: targets.iter().map(|s| s.to_string()).collect(),
            task,
        }
    }

    #[test]
    fn blank_cells_become_masked_entries() {
        let f = write_csv("smiles,t1\nCCO,1\nCCC,\nCCN,0\n");
        let loaded = load_dataset(
            &spec(f.path(), &["t1"], TaskKind::Classification),
            ParseOptions::default(),
        )
        .unwrap();
        assert_eq!(loaded.records.len(), 3);
        assert_eq!(loaded.records[1].mask, vec![false]);
        assert_eq!(loaded.records[0].mask, vec![true]);
        assert!(loaded.dropped.is_empty());
    }

    #[test]
    fn invalid_smiles_rows_are_dropped_and_counted() {
        let f = write_csv("smiles,t1\nCCO,1\nnot_a_smiles((,0\nCCN,1\n");
        let loaded = load_dataset(
            &spec(f.path(), &["t1"], TaskKind::Classification),
            ParseOptions::default(),
        )
        .unwrap();
        assert_eq!(loaded.records.len(), 2);
        assert_eq!(loaded.dropped.len(), 1);
        assert_eq!(loaded.dropped[0].0, 1);
    }

    #[test]
    fn missing_column_is_an_error() {
        let f = write_csv("smiles,t1\nCCO,1\n");
        let err = load_dataset(
            &spec(f.path(), &["nope"], TaskKind::Classification),
            ParseOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, PipelineError::MissingColumn(_)));
    }

    #[test]
    fn target_inference_skips_text_and_id_columns() {
        let f = write_csv("iupac,smiles,mol_id,expt,calc\nfoo,CCO,X1,-3.2,-2.9\nbar,CCC,X2,1.0,0.8\n");
        let targets = infer_target_columns(f.path(), "smiles").unwrap();
        assert_eq!(targets, vec!["expt".to_string(), "calc".to_string()]);
    }
}
