//! Evaluation metrics: ROC-AUC (with tie handling) and RMSE, plus the
//! multi-task variants that skip tasks missing a class.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("ROC-AUC undefined: labels contain a single class")]
    SingleClass,
    #[error("metric inputs are empty")]
    Empty,
    #[error("metric input lengths differ")]
    LengthMismatch,
}

/// Probability that a random positive outranks a random negative, ties
/// counted one half. Computed via midranks (Mann-Whitney U).
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64, MetricError> {
    if scores.len() != labels.len() {
        return Err(MetricError::LengthMismatch);
    }
    if scores.is_empty() {
        return Err(MetricError::Empty);
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(MetricError::SingleClass);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());

    // midranks over tied score runs
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            if labels[idx] {
                rank_sum_pos += midrank;
            }
        }
        i = j + 1;
    }

    let pos = pos as f64;
    let neg = neg as f64;
    Ok((rank_sum_pos - pos * (pos + 1.0) / 2.0) / (pos * neg))
}

/// Root of the mean squared error.
pub fn rmse(pred: &[f64], target: &[f64]) -> Result<f64, MetricError> {
    if pred.len() != target.len() {
        return Err(MetricError::LengthMismatch);
    }
    if pred.is_empty() {
        return Err(MetricError::Empty);
    }
    let mse = pred
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / pred.len() as f64;
    Ok(mse.sqrt())
}

/// Per-task ROC-AUC over masked multi-task predictions; the summary is the
/// unweighted mean over tasks where both classes are present.
#[derive(Debug, Clone)]
pub struct MultiTaskAuc {
    pub mean: f64,
    pub per_task: Vec<Option<f64>>,
    pub skipped_tasks: usize,
}

/// `scores`, `labels`, `mask` are row-major `[n_samples][n_tasks]`.
/// Labels are read as positive when > 0.5. Tasks with a single class (or
/// fully masked) are skipped with a count rather than failing the run.
pub fn multi_task_auc(
    scores: &[Vec<f64>],
    labels: &[Vec<f64>],
    mask: &[Vec<bool>],
    num_tasks: usize,
) -> Result<MultiTaskAuc, MetricError> {
    let mut per_task = Vec::with_capacity(num_tasks);
    let mut sum = 0.0;
    let mut valid = 0usize;
    for task in 0..num_tasks {
        let mut s = Vec::new();
        let mut l = Vec::new();
        for ((row_s, row_l), row_m) in scores.iter().zip(labels).zip(mask) {
            if row_m[task] {
                s.push(row_s[task]);
                l.push(row_l[task] > 0.5);
            }
        }
        match roc_auc(&s, &l) {
            Ok(auc) => {
                per_task.push(Some(auc));
                sum += auc;
                valid += 1;
            }
            Err(MetricError::SingleClass) | Err(MetricError::Empty) => per_task.push(None),
            Err(e) => return Err(e),
        }
    }
    if valid == 0 {
        return Err(MetricError::SingleClass);
    }
    Ok(MultiTaskAuc {
        mean: sum / valid as f64,
        per_task,
        skipped_tasks: num_tasks - valid,
    })
}

/// RMSE over unmasked entries of a multi-task regression matrix.
pub fn rmse_masked(
    pred: &[Vec<f64>],
    target: &[Vec<f64>],
    mask: &[Vec<bool>],
) -> Result<f64, MetricError> {
    let mut p = Vec::new();
    let mut t = Vec::new();
    for ((row_p, row_t), row_m) in pred.iter().zip(target).zip(mask) {
        for ((pv, tv), &mv) in row_p.iter().zip(row_t).zip(row_m) {
            if mv {
                p.push(*pv);
                t.push(*tv);
            }
        }
    }
    rmse(&p, &t)
}
