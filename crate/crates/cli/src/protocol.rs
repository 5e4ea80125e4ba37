//! The three-seed evaluation protocol: per seed, build an 80:10:10
//! scaffold split, train, evaluate on the test partition, then report
//! mean and standard deviation in `mean(std)` form.

use crate::cache::{CacheManifest, CacheRecord};
use crate::config::RunConfig;
use crate::dataset::TaskKind;
use crate::splitio::make_split;
use crate::train::{evaluate, train};
use crate::PipelineError;
use serde::{Deserialize, Serialize};

pub const DEFAULT_RATIOS: [f64; 3] = [0.8, 0.1, 0.1];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub value: f64,
    pub baseline_rmse: Option<f64>,
    pub best_epoch: usize,
    pub epochs_run: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub metric_name: String,
    pub per_seed: Vec<SeedResult>,
    pub mean: f64,
    pub std: f64,
    /// Table-style rendering, e.g. `0.845(0.008)`.
    pub formatted: String,
    pub baseline_mean: Option<f64>,
    pub config_digest: String,
    pub tool_version: String,
}

/// Population mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn format_mean_std(mean: f64, std: f64) -> String {
    format!("{mean:.3}({std:.3})")
}

/// Runs split -> train -> evaluate once per seed and aggregates.
pub fn run_protocol(
    manifest: &CacheManifest,
    records: &[CacheRecord],
    cfg: &RunConfig,
    seeds: &[u64],
    ratios: [f64; 3],
) -> Result<ProtocolReport, PipelineError> {
    let mut per_seed = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let split = make_split(records, seed, ratios)?;
        let out = train(manifest, records, &split, cfg)?;
        let report = evaluate(manifest, records, &split, &out.store, cfg)?;
        per_seed.push(SeedResult {
            seed,
            value: report.value,
            baseline_rmse: report.baseline_rmse,
            best_epoch: out.best_epoch,
            epochs_run: out.epochs_run,
        });
    }
    let values: Vec<f64> = per_seed.iter().map(|r| r.value).collect();
    let (mean, std) = mean_std(&values);
    let baseline_mean = match manifest.task {
        TaskKind::Regression => {
            let b: Vec<f64> = per_seed.iter().filter_map(|r| r.baseline_rmse).collect();
            (!b.is_empty()).then(|| b.iter().sum::<f64>() / b.len() as f64)
        }
        TaskKind::Classification => None,
    };
    Ok(ProtocolReport {
        metric_name: match manifest.task {
            TaskKind::Classification => "roc_auc".to_string(),
            TaskKind::Regression => "rmse".to_string(),
        },
        per_seed,
        mean,
        std,
        formatted: format_mean_std(mean, std),
        baseline_mean,
        config_digest: cfg.digest(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std_and_formatting() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert!((m - 2.0).abs() < 1e-15);
        assert!((s - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(format_mean_std(0.8451, 0.0084), "0.845(0.008)");
        assert_eq!(format_mean_std(1.5006, 0.3764), "1.501(0.376)");
    }

    #[test]
    fn constant_values_have_zero_std() {
        let (m, s) = mean_std(&[0.7, 0.7, 0.7]);
        assert!((m - 0.7).abs() < 1e-15);
        assert!(s < 1e-12);
    }
}
