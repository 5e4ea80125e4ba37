//! Line-delimited graph cache.
//!
//! First line: manifest (feature widths, coarsen flag, task, tool
//! version). Then one JSON record per molecule. Output is byte-stable for
//! fixed inputs, so cached datasets diff cleanly.

use crate::dataset::{DataRecord, TaskKind};
use crate::PipelineError;
use funqg_core::coarsen::funqg;
use funqg_core::featurize::{featurize, EDGE_FEATURES, NODE_FEATURES};
use funqg_core::scaffold::{murcko_scaffold, ScaffoldKey};
use funqg_core::smiles::{parse_smiles_with, ParseOptions};
use funqg_core::MolGraph;
use funqg_core::Tensor;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

pub const CACHE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheManifest {
    pub format_version: u32,
    pub tool_version: String,
    pub n_i: usize,
    pub e_i: usize,
    pub coarsen: bool,
    pub task: TaskKind,
    pub target_names: Vec<String>,
}

impl CacheManifest {
    pub fn new(coarsen: bool, task: TaskKind, target_names: Vec<String>) -> Self {
        CacheManifest {
            format_version: CACHE_FORMAT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            n_i: NODE_FEATURES,
            e_i: EDGE_FEATURES,
            coarsen,
            task,
            target_names,
        }
    }

    pub fn num_tasks(&self) -> usize {
        self.target_names.len()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CacheRecord {
    pub index: usize,
    pub smiles: String,
    pub nodes: Vec<Vec<f64>>,
    pub edges: Vec<(usize, usize)>,
    pub edge_features: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub mask: Vec<u8>,
    pub scaffold_key: String,
}

impl CacheRecord {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn scaffold(&self) -> ScaffoldKey {
        ScaffoldKey::from_hex(&self.scaffold_key).unwrap_or(ScaffoldKey::EMPTY)
    }

    /// Materializes the stored graph.
    pub fn to_graph(&self) -> MolGraph {
        let n = self.nodes.len();
        let n_i = self.nodes.first().map_or(0, Vec::len);
        let mut node_features = Tensor::zeros((n, n_i));
        for (i, row) in self.nodes.iter().enumerate() {
            node_features.row_mut(i).assign(&ndarray::aview1(row));
        }
        let ne = self.edge_features.len();
        let e_i = self.edge_features.first().map_or(9, Vec::len);
        let mut edge_features = Tensor::zeros((ne, e_i));
        for (i, row) in self.edge_features.iter().enumerate() {
            edge_features.row_mut(i).assign(&ndarray::aview1(row));
        }
        MolGraph {
            node_features,
            edges: self.edges.clone(),
            edge_features,
        }
    }
}

#[derive(Debug, Default)]
pub struct BuildReport {
    /// `(row index, reason)` for molecules skipped during graph building.
    pub skipped: Vec<(usize, String)>,
}

fn to_rows(t: &Tensor) -> Vec<Vec<f64>> {
    t.rows().into_iter().map(|r| r.to_vec()).collect()
}

/// Builds cache records (in input order), coarsening if requested; SMILES
/// are re-parsed under the same fragment policy the loader used.
/// Per-molecule failures are skipped and reported, not fatal.
pub fn build_cache(
    records: &[DataRecord],
    coarsen: bool,
    parse_opts: ParseOptions,
) -> (Vec<CacheRecord>, BuildReport) {
    let results: Vec<Result<CacheRecord, (usize, String)>> = records
        .par_iter()
        .map(|r| build_one(r, coarsen, parse_opts).map_err(|e| (r.row, e.to_string())))
        .collect();
    let mut out = Vec::with_capacity(records.len());
    let mut report = BuildReport::default();
    for res in results {
        match res {
            Ok(rec) => out.push(rec),
            Err(pair) => report.skipped.push(pair),
        }
    }
    (out, report)
}

fn build_one(
    record: &DataRecord,
    coarsen: bool,
    parse_opts: ParseOptions,
) -> Result<CacheRecord, PipelineError> {
    let molecule = parse_smiles_with(&record.smiles, parse_opts)?.molecule;
    let key = murcko_scaffold(&molecule);
    let (nodes, edges, edge_features) = if coarsen {
        let q = funqg::<f64>(&molecule)?;
        (to_rows(&q.node_features), q.edges, to_rows(&q.edge_features))
    } else {
        let g = featurize::<f64>(&molecule)?;
        (to_rows(&g.node_features), g.edges, to_rows(&g.edge_features))
    };
    Ok(CacheRecord {
        index: record.row,
        smiles: record.smiles.clone(),
        nodes,
        edges,
        edge_features,
        targets: record.targets.clone(),
        mask: record.mask.iter().map(|&m| u8::from(m)).collect(),
        scaffold_key: key.to_hex(),
    })
}

pub fn write_cache(
    path: &Path,
    manifest: &CacheManifest,
    records: &[CacheRecord],
) -> Result<(), PipelineError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer(&mut w, manifest)?;
    writeln!(w)?;
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_cache(path: &Path) -> Result<(CacheManifest, Vec<CacheRecord>), PipelineError> {
    let mut lines = BufReader::new(std::fs::File::open(path)?).lines();
    let manifest_line = lines
        .next()
        .ok_or_else(|| PipelineError::BadCache("empty file".into()))??;
    let manifest: CacheManifest = serde_json::from_str(&manifest_line)
        .map_err(|e| PipelineError::BadCache(format!("manifest: {e}")))?;
    if manifest.format_version != CACHE_FORMAT_VERSION {
        return Err(PipelineError::BadCache(format!(
            "format version {} (expected {})",
            manifest.format_version, CACHE_FORMAT_VERSION
        )));
    }
    if manifest.n_i != NODE_FEATURES || manifest.e_i != EDGE_FEATURES {
        return Err(PipelineError::ManifestMismatch(format!(
            "feature widths {}x{} (this build uses {}x{})",
            manifest.n_i, manifest.e_i, NODE_FEATURES, EDGE_FEATURES
        )));
    }
    let mut records = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: CacheRecord = serde_json::from_str(&line)
            .map_err(|e| PipelineError::BadCache(format!("record at line {}: {e}", lineno + 2)))?;
        if record.targets.len() != manifest.num_tasks() {
            return Err(PipelineError::BadCache(format!(
                "record {} has {} targets, manifest declares {}",
                record.index,
                record.targets.len(),
                manifest.num_tasks()
            )));
        }
        records.push(record);
    }
    if records.is_empty() {
        return Err(PipelineError::EmptyDataset);
    }
    Ok((manifest, records))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(row: usize, smiles: &str, target: f64) -> DataRecord {
        DataRecord {
            row,
            smiles: smiles.to_string(),
            targets: vec![target],
            mask: vec![true],
            dropped_fragments: 0,
        }
    }

    #[test]
    fn ethanol_coarsened_record() {
        let (records, report) = build_cache(&[record(0, "CCO", 1.0)], true, ParseOptions::default());
        assert!(report.skipped.is_empty());
        assert_eq!(records[0].num_nodes(), 2);
        assert_eq!(records[0].edges.len(), 1);
        // uncoarsened keeps all atoms
        let (records, _) = build_cache(&[record(0, "CCO", 1.0)], false, ParseOptions::default());
        assert_eq!(records[0].num_nodes(), 3);
    }

    #[test]
    fn cache_files_are_byte_stable() {
        let input: Vec<DataRecord> = [("CCO", 1.0), ("c1ccccc1", 0.0), ("CC(=O)O", 1.0)]
            .iter()
            .enumerate()
            .map(|(i, (s, t))| record(i, s, *t))
            .collect();
        let manifest = CacheManifest::new(true, TaskKind::Classification, vec!["t".into()]);
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.jsonl");
        let p2 = dir.path().join("b.jsonl");
        let (r1, _) = build_cache(&input, true, ParseOptions::default());
        let (r2, _) = build_cache(&input, true, ParseOptions::default());
        write_cache(&p1, &manifest, &r1).unwrap();
        write_cache(&p2, &manifest, &r2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());

        let (m, rs) = read_cache(&p1).unwrap();
        assert_eq!(m, manifest);
        assert_eq!(rs.len(), 3);
        assert_eq!(rs[1].num_nodes(), 1); // benzene contracts to one block
    }

    #[test]
    fn round_trip_graph_materialization() {
        let (records, _) = build_cache(&[record(0, "CC(=O)O", 0.5)], true, ParseOptions::default());
        let g = records[0].to_graph();
        assert_eq!(g.num_nodes(), records[0].num_nodes());
        assert_eq!(g.n_i(), NODE_FEATURES);
    }
}
