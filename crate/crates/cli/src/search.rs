//! Seeded random hyperparameter search.
//!
//! Samples configurations from declared ranges, trains each on the first
//! split seed, and keeps the best validation metric. Fully reproducible
//! from the search seed; diverging trials (non-finite loss) are recorded
//! as failed rather than aborting the search.

use crate::cache::{CacheManifest, CacheRecord};
use crate::config::RunConfig;
use crate::dataset::TaskKind;
use crate::protocol::DEFAULT_RATIOS;
use crate::splitio::make_split;
use crate::train::train;
use crate::PipelineError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Sampling ranges. Defaults: hidden and FFN width 64..=300, message steps
/// {2,3,4} on coarsened graphs and {3,4,5,6} on raw molecular graphs,
/// learning rate log-uniform on [1e-4, 1e-2], dropout {0, 0.1, 0.2, 0.4},
/// max-norm {2, 3, none}, batch size {16, 32, 64}.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSpace {
    pub hidden: (usize, usize),
    pub steps_coarsened: Vec<usize>,
    pub steps_raw: Vec<usize>,
    pub lr_bounds: (f64, f64),
    /// Discrete learning-rate grid; overrides `lr_bounds` when set.
    pub lr_choices: Option<Vec<f64>>,
    pub dropout: Vec<f64>,
    pub max_norm: Vec<Option<f64>>,
    pub ffn_hidden: (usize, usize),
    pub batch_size: Vec<usize>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            hidden: (64, 300),
            steps_coarsened: vec![2, 3, 4],
            steps_raw: vec![3, 4, 5, 6],
            lr_bounds: (1e-4, 1e-2),
            lr_choices: None,
            dropout: vec![0.0, 0.1, 0.2, 0.4],
            max_norm: vec![Some(2.0), Some(3.0), None],
            ffn_hidden: (64, 300),
            batch_size: vec![16, 32, 64],
        }
    }
}

impl SearchSpace {
    /// Draws one configuration; the draw order is fixed, so one seed maps
    /// to one deterministic trial sequence.
    pub fn sample<R: Rng>(&self, base: &RunConfig, rng: &mut R) -> RunConfig {
        let mut cfg = base.clone();
        cfg.hidden_size = rng.random_range(self.hidden.0..=self.hidden.1);
        let steps = if cfg.coarsen {
            &self.steps_coarsened
        } else {
            &self.steps_raw
        };
        cfg.message_steps = steps[rng.random_range(0..steps.len())];
        cfg.lr = match &self.lr_choices {
            Some(choices) => choices[rng.random_range(0..choices.len())],
            None => {
                let (lo, hi) = self.lr_bounds;
                (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
            }
        };
        cfg.dropout = self.dropout[rng.random_range(0..self.dropout.len())];
        cfg.max_norm = self.max_norm[rng.random_range(0..self.max_norm.len())];
        cfg.ffn_hidden = rng.random_range(self.ffn_hidden.0..=self.ffn_hidden.1);
        cfg.batch_size = self.batch_size[rng.random_range(0..self.batch_size.len())];
        cfg
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub config: RunConfig,
    pub val_metric: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchOutput {
    pub best: RunConfig,
    pub best_trial: usize,
    pub best_val: f64,
    pub trials: Vec<TrialResult>,
    pub seed: u64,
}

/// Random search over `budget` sampled configs, each trained on the first
/// split seed of the base config; returns the best by validation metric.
pub fn hyper_search(
    manifest: &CacheManifest,
    records: &[CacheRecord],
    base: &RunConfig,
    space: &SearchSpace,
    budget: usize,
    seed: u64,
) -> Result<SearchOutput, PipelineError> {
    if budget == 0 {
        return Err(PipelineError::BadConfig("search budget must be >= 1".into()));
    }
    let split_seed = *base.split_seeds.first().unwrap_or(&1);
    let split = make_split(records, split_seed, DEFAULT_RATIOS)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let configs: Vec<RunConfig> = (0..budget).map(|_| space.sample(base, &mut rng)).collect();

    let trials: Vec<TrialResult> = configs
        .into_par_iter()
        .enumerate()
        .map(|(i, config)| match train(manifest, records, &split, &config) {
            Ok(out) => TrialResult {
                trial: i,
                config,
                val_metric: Some(out.best_val),
                error: None,
            },
            Err(PipelineError::NonFiniteLoss { epoch, batch }) => TrialResult {
                trial: i,
                config,
                val_metric: None,
                error: Some(format!("non-finite loss at epoch {epoch}, batch {batch}")),
            },
            Err(e) => TrialResult {
                trial: i,
                config,
                val_metric: None,
                error: Some(e.to_string()),
            },
        })
        .collect();

    let better = |a: f64, b: f64| match manifest.task {
        TaskKind::Classification => a > b,
        TaskKind::Regression => a < b,
    };
    let mut best: Option<&TrialResult> = None;
    for t in &trials {
        let Some(v) = t.val_metric else { continue };
        match best {
            None => best = Some(t),
            Some(b) if better(v, b.val_metric.unwrap()) => best = Some(t),
            _ => {}
        }
    }
    let best = best.ok_or_else(|| {
        PipelineError::BadConfig("every search trial failed (non-finite loss)".into())
    })?;
    Ok(SearchOutput {
        best: best.config.clone(),
        best_trial: best.trial,
        best_val: best.val_metric.unwrap(),
        trials: trials.clone(),
        seed,
    })
}
