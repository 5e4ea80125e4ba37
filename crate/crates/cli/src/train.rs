//! Training loop (Adam + max-norm + dropout + early stopping) and test
//! evaluation with reports.

use crate::cache::{CacheManifest, CacheRecord};
use crate::config::RunConfig;
use crate::dataset::TaskKind;
use crate::PipelineError;
use funqg_core::model::{build_batch, forward_eval, forward_train, init_params, GraphRef};
use funqg_core::nn::metrics;
use funqg_core::nn::{AdamConfig, NnError, Tensor2};
use funqg_core::scaffold::{SplitAssignment, SplitError};
use funqg_core::{MolGraph, ParamStore};
use num_traits::ToPrimitive;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_metric: f64,
}

#[derive(Debug)]
pub struct TrainOutput {
    /// Parameters restored to the best-validation epoch.
    pub store: ParamStore,
    pub log: Vec<EpochLog>,
    pub best_epoch: usize,
    pub best_val: f64,
    pub epochs_run: usize,
    pub skipped_batches: usize,
}

/// Higher is better for classification (ROC-AUC), lower for regression
/// (RMSE).
fn improved(task: TaskKind, value: f64, best: Option<f64>) -> bool {
    match best {
        None => true,
        Some(b) => match task {
            TaskKind::Classification => value > b,
            TaskKind::Regression => value < b,
        },
    }
}

type TargetsAndMask = (Tensor2<f64>, Tensor2<f64>);

fn targets_of(records: &[CacheRecord], indices: &[usize], tasks: usize) -> TargetsAndMask {
    let mut targets = Tensor2::<f64>::zeros((indices.len(), tasks));
    let mut mask = Tensor2::<f64>::zeros((indices.len(), tasks));
    for (row, &i) in indices.iter().enumerate() {
        for t in 0..tasks {
            targets[(row, t)] = records[i].targets[t];
            mask[(row, t)] = f64::from(records[i].mask[t]);
        }
    }
    (targets, mask)
}

/// Batched eval-mode predictions for the given record positions.
pub fn predict(
    graphs: &[MolGraph],
    indices: &[usize],
    store: &ParamStore,
    cfg: &RunConfig,
    tasks: usize,
) -> Result<Vec<Vec<f64>>, PipelineError> {
    let model_cfg = cfg.model_config(tasks);
    let mut out = Vec::with_capacity(indices.len());
    for chunk in indices.chunks(cfg.batch_size.max(1)) {
        let refs: Vec<GraphRef<f64>> = chunk.iter().map(|&i| (&graphs[i]).into()).collect();
        let batch = build_batch(&refs)?;
        let pass = forward_eval(&batch, store, &model_cfg)?;
        for row in pass.predictions().rows() {
            out.push(row.iter().map(|v| v.to_f64().unwrap()).collect());
        }
    }
    Ok(out)
}

/// Metric value plus optional per-task breakdown (classification only).
pub type MetricReport = (f64, Option<Vec<Option<f64>>>);

/// Metric over a partition: mean multi-task ROC-AUC (on raw logits; AUC is
/// rank-based) or RMSE over unmasked entries.
pub fn eval_metric(
    records: &[CacheRecord],
    graphs: &[MolGraph],
    indices: &[usize],
    store: &ParamStore,
    cfg: &RunConfig,
    manifest: &CacheManifest,
) -> Result<MetricReport, PipelineError> {
    let tasks = manifest.num_tasks();
    let scores = predict(graphs, indices, store, cfg, tasks)?;
    let labels: Vec<Vec<f64>> = indices.iter().map(|&i| records[i].targets.clone()).collect();
    let mask: Vec<Vec<bool>> = indices
        .iter()
        .map(|&i| records[i].mask.iter().map(|&m| m != 0).collect())
        .collect();
    match manifest.task {
        TaskKind::Classification => {
            let auc = metrics::multi_task_auc(&scores, &labels, &mask, tasks)?;
            Ok((auc.mean, Some(auc.per_task)))
        }
        TaskKind::Regression => {
            let value = metrics::rmse_masked(&scores, &labels, &mask)?;
            Ok((value, None))
        }
    }
}

/// Epoch loop with seeded shuffling, Adam updates, max-norm after each
/// update, dropout in training mode, and patience-based early stopping on
/// the validation metric. The returned store holds the best-validation
/// parameters.
pub fn train(
    manifest: &CacheManifest,
    records: &[CacheRecord],
    split: &SplitAssignment,
    cfg: &RunConfig,
) -> Result<TrainOutput, PipelineError> {
    cfg.validate()?;
    if split.train.is_empty() {
        return Err(SplitError::DegenerateSplit("train").into());
    }
    if split.valid.is_empty() {
        return Err(SplitError::DegenerateSplit("valid").into());
    }
    let tasks = manifest.num_tasks();
    let model_cfg = cfg.model_config(tasks);
    let graphs: Vec<MolGraph> = records.iter().map(CacheRecord::to_graph).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut store = init_params::<f64, _>(&model_cfg, manifest.n_i, manifest.e_i, &mut rng)?;
    let adam = AdamConfig {
        lr: cfg.lr,
        beta1: cfg.beta1,
        beta2: cfg.beta2,
        eps: cfg.eps,
    };

    let mut log = Vec::new();
    let mut best: Option<f64> = None;
    let mut best_epoch = 0usize;
    let mut snapshot = store.snapshot();
    let mut bad_epochs = 0usize;
    let mut epochs_run = 0usize;
    let mut skipped_batches = 0usize;
    let mut train_indices = split.train.clone();

    for epoch in 1..=cfg.max_epochs {
        epochs_run = epoch;
        train_indices.shuffle(&mut rng);
        let mut batch_losses = Vec::new();
        for (batch_no, chunk) in train_indices.chunks(cfg.batch_size).enumerate() {
            let refs: Vec<GraphRef<f64>> = chunk.iter().map(|&i| (&graphs[i]).into()).collect();
            let batch = build_batch(&refs)?;
            let (targets, mask) = targets_of(records, chunk, tasks);

            let nonfinite = |e: NnError| match e {
                NnError::NonFiniteValue { .. } => PipelineError::NonFiniteLoss {
                    epoch,
                    batch: batch_no,
                },
                other => other.into(),
            };
            let mut pass = forward_train(&batch, &store, &model_cfg, &mut rng).map_err(|e| {
                match e {
                    funqg_core::model::ModelError::Nn(inner) => nonfinite(inner),
                    other => other.into(),
                }
            })?;
            let loss = match manifest.task {
                TaskKind::Classification => pass.loss_masked_bce(&targets, &mask),
                TaskKind::Regression => pass.loss_masked_mse(&targets, &mask),
            };
            let loss = match loss {
                Ok(l) => l,
                Err(NnError::AllMasked) => {
                    // a fully masked batch carries no signal; skip it
                    skipped_batches += 1;
                    continue;
                }
                Err(e) => return Err(nonfinite(e)),
            };
            batch_losses.push(pass.tape.value(loss)[(0, 0)]);
            pass.backprop(loss, &mut store).map_err(nonfinite)?;
            store.adam_step(&adam);
            if let Some(c) = cfg.max_norm {
                store.max_norm(c);
            }
        }

        let (val_metric, _) = eval_metric(records, &graphs, &split.valid, &store, cfg, manifest)?;
        let train_loss = if batch_losses.is_empty() {
            f64::NAN
        } else {
            batch_losses.iter().sum::<f64>() / batch_losses.len() as f64
        };
        log.push(EpochLog {
            epoch,
            train_loss,
            val_metric,
        });

        if improved(manifest.task, val_metric, best) {
            best = Some(val_metric);
            best_epoch = epoch;
            snapshot = store.snapshot();
            bad_epochs = 0;
        } else {
            bad_epochs += 1;
            if bad_epochs >= cfg.patience {
                break;
            }
        }
    }

    store.restore(&snapshot);
    Ok(TrainOutput {
        store,
        log,
        best_epoch,
        best_val: best.unwrap_or(f64::NAN),
        epochs_run,
        skipped_batches,
    })
}

/// Metrics report for the test partition of a split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub metric_name: String,
    pub value: f64,
    pub per_task: Option<Vec<Option<f64>>>,
    /// Test RMSE of the constant train-mean predictor (regression only).
    pub baseline_rmse: Option<f64>,
    pub partition: String,
    pub n_train: usize,
    pub n_valid: usize,
    pub n_test: usize,
    pub split_seed: u64,
    pub split_ratios: [f64; 3],
    pub config_digest: String,
    pub tool_version: String,
}

/// Evaluates a trained store on the test partition only.
pub fn evaluate(
    manifest: &CacheManifest,
    records: &[CacheRecord],
    split: &SplitAssignment,
    store: &ParamStore,
    cfg: &RunConfig,
) -> Result<EvalReport, PipelineError> {
    let graphs: Vec<MolGraph> = records.iter().map(CacheRecord::to_graph).collect();
    let (value, per_task) = eval_metric(records, &graphs, &split.test, store, cfg, manifest)?;
    let baseline_rmse = match manifest.task {
        TaskKind::Regression => Some(constant_baseline_rmse(records, split, manifest)?),
        TaskKind::Classification => None,
    };
    Ok(EvalReport {
        metric_name: match manifest.task {
            TaskKind::Classification => "roc_auc".to_string(),
            TaskKind::Regression => "rmse".to_string(),
        },
        value,
        per_task,
        baseline_rmse,
        partition: "test".to_string(),
        n_train: split.train.len(),
        n_valid: split.valid.len(),
        n_test: split.test.len(),
        split_seed: split.seed,
        split_ratios: split.ratios(),
        config_digest: cfg.digest(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
    })
}

/// Test RMSE when every prediction is the train-partition target mean.
pub fn constant_baseline_rmse(
    records: &[CacheRecord],
    split: &SplitAssignment,
    manifest: &CacheManifest,
) -> Result<f64, PipelineError> {
    let tasks = manifest.num_tasks();
    let mut means = vec![0.0; tasks];
    for (t, mean) in means.iter_mut().enumerate() {
        let mut sum = 0.0;
        let mut count = 0usize;
        for &i in &split.train {
            if records[i].mask[t] != 0 {
                sum += records[i].targets[t];
                count += 1;
            }
        }
        *mean = if count > 0 { sum / count as f64 } else { 0.0 };
    }
    let pred: Vec<Vec<f64>> = split.test.iter().map(|_| means.clone()).collect();
    let target: Vec<Vec<f64>> = split.test.iter().map(|&i| records[i].targets.clone()).collect();
    let mask: Vec<Vec<bool>> = split
        .test
        .iter()
        .map(|&i| records[i].mask.iter().map(|&m| m != 0).collect())
        .collect();
    Ok(metrics::rmse_masked(&pred, &target, &mask)?)
}
