//! Split construction over cache records and the text split manifest
//! (`{index, smiles, partition, scaffold_key_hex}` per line).

use crate::cache::CacheRecord;
use crate::PipelineError;
use funqg_core::scaffold::{scaffold_split, ScaffoldKey, SplitAssignment};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

#[derive(Debug, Serialize, Deserialize)]
struct SplitHeader {
    seed: u64,
    ratios: [f64; 3],
}

#[derive(Debug, Serialize, Deserialize)]
struct SplitLine {
    index: usize,
    smiles: String,
    partition: String,
    scaffold_key_hex: String,
}

/// Groups the cached molecules by scaffold key and splits them.
/// Positions in the returned assignment refer to `records` order.
pub fn make_split(
    records: &[CacheRecord],
    seed: u64,
    ratios: [f64; 3],
) -> Result<SplitAssignment, PipelineError> {
    let keys: Vec<ScaffoldKey> = records.iter().map(CacheRecord::scaffold).collect();
    Ok(scaffold_split(&keys, seed, ratios)?)
}

pub fn write_split_manifest(
    path: &Path,
    records: &[CacheRecord],
    split: &SplitAssignment,
) -> Result<(), PipelineError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer(
        &mut w,
        &SplitHeader {
            seed: split.seed,
            ratios: split.ratios(),
        },
    )?;
    writeln!(w)?;
    let mut partition = vec![""; records.len()];
    for &i in &split.train {
        partition[i] = "train";
    }
    for &i in &split.valid {
        partition[i] = "valid";
    }
    for &i in &split.test {
        partition[i] = "test";
    }
    for (pos, record) in records.iter().enumerate() {
        serde_json::to_writer(
            &mut w,
            &SplitLine {
                index: record.index,
                smiles: record.smiles.clone(),
                partition: partition[pos].to_string(),
                scaffold_key_hex: record.scaffold_key.clone(),
            },
        )?;
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a split manifest back against the cache records it was written
/// for; any disagreement in length, indices, or keys is an error.
pub fn read_split_manifest(
    path: &Path,
    records: &[CacheRecord],
) -> Result<SplitAssignment, PipelineError> {
    let mut lines = BufReader::new(std::fs::File::open(path)?).lines();
    let header: SplitHeader = serde_json::from_str(
        &lines
            .next()
            .ok_or_else(|| PipelineError::BadSplitManifest("empty file".into()))??,
    )?;
    let mut train = Vec::new();
    let mut valid = Vec::new();
    let mut test = Vec::new();
    let mut count = 0usize;
    for (pos, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: SplitLine = serde_json::from_str(&line)?;
        let record = records.get(pos).ok_or_else(|| {
            PipelineError::BadSplitManifest(format!("more lines than cache records ({pos})"))
        })?;
        if record.index != parsed.index || record.scaffold_key != parsed.scaffold_key_hex {
            return Err(PipelineError::BadSplitManifest(format!(
                "record {} does not match cache entry at position {pos}",
                parsed.index
            )));
        }
        match parsed.partition.as_str() {
            "train" => train.push(pos),
            "valid" => valid.push(pos),
            "test" => test.push(pos),
            other => {
                return Err(PipelineError::BadSplitManifest(format!(
                    "unknown partition {other:?}"
                )))
            }
        }
        count += 1;
    }
    if count != records.len() {
        return Err(PipelineError::BadSplitManifest(format!(
            "{count} lines for {} cache records",
            records.len()
        )));
    }
    Ok(SplitAssignment {
        train,
        valid,
        test,
        seed: header.seed,
        ratios_milli: header.ratios.map(|r| (r * 1000.0).round() as u32),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cache::build_cache;
    use crate::dataset::DataRecord;
    use funqg_core::smiles::ParseOptions;

    fn records() -> Vec<CacheRecord> {
        // ten distinct ring scaffolds so the split cannot degenerate
        let smiles = [
            "c1ccccc1C", "C1CCCCC1O", "c1ccncc1C", "C1CCOC1", "c1ccc2ccccc2c1",
            "C1CC1CC", "C1CCC1N", "c1cscc1", "C1CCNC1", "c1ccoc1C",
        ];
        let data: Vec<DataRecord> = smiles
            .iter()
            .enumerate()
            .map(|(i, s)| DataRecord {
                row: i,
                smiles: s.to_string(),
                targets: vec![i as f64],
                mask: vec![true],
                dropped_fragments: 0,
            })
            .collect();
        let (records, report) = build_cache(&data, true, ParseOptions::default());
        assert!(report.skipped.is_empty());
        records
    }

    #[test]
    fn split_manifest_round_trip() {
        let records = records();
        let split = make_split(&records, 7, [0.8, 0.1, 0.1]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("split.jsonl");
        write_split_manifest(&path, &records, &split).unwrap();
        let loaded = read_split_manifest(&path, &records).unwrap();
        assert_eq!(loaded, split);
    }

    #[test]
    fn manifest_against_wrong_cache_fails() {
        let records = records();
        let split = make_split(&records, 7, [0.8, 0.1, 0.1]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("split.jsonl");
        write_split_manifest(&path, &records, &split).unwrap();

        let mut other = records.clone();
        other.swap(0, 5);
        assert!(read_split_manifest(&path, &other).is_err());
    }
}
