//! Pipeline layer: CSV ingestion, graph caching, scaffold splits, training
//! with early stopping, evaluation, the three-seed protocol, and seeded
//! random hyperparameter search.

pub mod cache;
pub mod config;
pub mod dataset;
pub mod gradcheck;
pub mod protocol;
pub mod search;
pub mod splitio;
pub mod train;

use funqg_core::coarsen::CoarsenError;
use funqg_core::featurize::FeaturizeError;
use funqg_core::model::ModelError;
use funqg_core::nn::metrics::MetricError;
use funqg_core::nn::NnError;
use funqg_core::scaffold::SplitError;
use funqg_core::smiles::SmilesError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("column {0:?} not found in CSV header")]
    MissingColumn(String),
    #[error("dataset has no usable records")]
    EmptyDataset,
    #[error("invalid run config: {0}")]
    BadConfig(String),
    #[error("non-finite loss at epoch {epoch}, batch {batch}; aborting")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("cache manifest mismatch: {0}")]
    ManifestMismatch(String),
    #[error("cache file is malformed: {0}")]
    BadCache(String),
    #[error("split manifest does not match the cache: {0}")]
    BadSplitManifest(String),
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error(transparent)]
    Smiles(#[from] SmilesError),
    #[error(transparent)]
    Coarsen(#[from] CoarsenError),
    #[error(transparent)]
    Featurize(#[from] FeaturizeError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl From<NnError> for PipelineError {
    fn from(e: NnError) -> Self {
        PipelineError::Model(ModelError::Nn(e))
    }
}

/// Worker-count cap from the FUNQG_WORKERS environment variable.
pub fn configured_workers() -> Option<usize> {
    std::env::var("FUNQG_WORKERS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
}
