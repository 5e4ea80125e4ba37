//! MPNN and DMPNN message-passing architectures over graph batches.
//!
//! Both models share the readout: node states are dropout-regularized,
//! pooled per graph (mean by default), and passed through a feed-forward
//! head with two ReLU hidden layers and a linear output. Classification
//! outputs are logits; the sigmoid lives in metric computation.

pub mod batch;
mod dmpnn;
mod mpnn;

pub use batch::{build_batch, GraphBatch, GraphRef};

use crate::nn::scalar::Scalar;
use crate::nn::tape::{dropout_mask, NnError, Tape, Var};
use crate::nn::{ParamKind, ParamStore, Tensor2};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("batch contains no graphs")]
    EmptyBatch,
    #[error("graph {graph} in batch has zero nodes")]
    EmptyGraph { graph: usize },
    #[error("graph {graph} has a different feature width than the batch")]
    FeatureWidthMismatch { graph: usize },
    #[error("graph {graph} has an invalid edge ({u}, {v})")]
    BadEdge { graph: usize, u: usize, v: usize },
    #[error("invalid model config: {0}")]
    BadConfig(&'static str),
    #[error(transparent)]
    Nn(#[from] NnError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    Mpnn,
    Dmpnn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Readout {
    Mean,
    Sum,
}

/// Architecture hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub architecture: Architecture,
    /// Hidden size h.
    pub hidden: usize,
    /// Message-passing steps T.
    pub steps: usize,
    /// Width of the two FFN hidden layers.
    pub ffn_hidden: usize,
    pub dropout: f64,
    pub readout: Readout,
    /// Output dimension = number of tasks.
    pub tasks: usize,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.hidden == 0 {
            return Err(ModelError::BadConfig("hidden size must be >= 1"));
        }
        if self.steps == 0 {
            return Err(ModelError::BadConfig("message steps must be >= 1"));
        }
        if self.ffn_hidden == 0 {
            return Err(ModelError::BadConfig("ffn width must be >= 1"));
        }
        if self.tasks == 0 {
            return Err(ModelError::BadConfig("output dimension must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ModelError::BadConfig("dropout must be in [0, 1)"));
        }
        Ok(())
    }
}

/// Glorot-uniform initialization of all weight matrices; biases start at
/// zero. Parameter creation order is fixed so a seeded generator always
/// produces the same store.
pub fn init_params<S: Scalar, R: Rng>(
    cfg: &ModelConfig,
    n_i: usize,
    e_i: usize,
    rng: &mut R,
) -> Result<ParamStore<S>, ModelError> {
    cfg.validate()?;
    let h = cfg.hidden;
    let f = cfg.ffn_hidden;
    let mut store = ParamStore::new();
    let weight = |store: &mut ParamStore<S>, name: &str, rows: usize, cols: usize, rng: &mut R| {
        let bound = (6.0 / (rows + cols) as f64).sqrt();
        let value = Tensor2::from_shape_fn((rows, cols), |_| {
            S::from_f64((rng.random::<f64>() * 2.0 - 1.0) * bound).unwrap()
        });
        store.add(name, ParamKind::Weight, value);
    };
    match cfg.architecture {
        Architecture::Mpnn => {
            weight(&mut store, "w_i", h, n_i, rng);
            weight(&mut store, "w_m", h, h + e_i, rng);
            weight(&mut store, "w_o", h, h + n_i, rng);
        }
        Architecture::Dmpnn => {
            weight(&mut store, "w_i", h, n_i + e_i, rng);
            weight(&mut store, "w_m", h, h, rng);
            weight(&mut store, "w_o", h, h + n_i, rng);
        }
    }
    weight(&mut store, "ffn_w1", f, h, rng);
    store.add("ffn_b1", ParamKind::Bias, Tensor2::zeros((1, f)));
    weight(&mut store, "ffn_w2", f, f, rng);
    store.add("ffn_b2", ParamKind::Bias, Tensor2::zeros((1, f)));
    weight(&mut store, "ffn_w3", cfg.tasks, f, rng);
    store.add("ffn_b3", ParamKind::Bias, Tensor2::zeros((1, cfg.tasks)));
    Ok(store)
}

/// Closed-form learnable-parameter count for a config; matches the
/// [`ParamStore`] enumeration exactly.
pub fn count_parameters(cfg: &ModelConfig, n_i: usize, e_i: usize) -> usize {
    let h = cfg.hidden;
    let f = cfg.ffn_hidden;
    let out = cfg.tasks;
    let core = match cfg.architecture {
        Architecture::Dmpnn => h * (n_i + e_i) + h * h + h * (h + n_i),
        Architecture::Mpnn => h * n_i + h * (h + e_i) + h * (h + n_i),
    };
    let ffn = h * f + f + f * f + f + f * out + out;
    core + ffn
}

/// One recorded forward pass: the tape, the prediction node, and the
/// tape handles of every parameter (for gradient extraction).
pub struct ForwardPass<S: Scalar> {
    pub tape: Tape<S>,
    pub output: Var,
    param_vars: Vec<(String, Var)>,
}

impl<S: Scalar> ForwardPass<S> {
    /// Per-graph predictions, one row per graph.
    pub fn predictions(&self) -> &Tensor2<S> {
        self.tape.value(self.output)
    }

    pub fn loss_masked_bce(
        &mut self,
        targets: &Tensor2<S>,
        mask: &Tensor2<S>,
    ) -> Result<Var, NnError> {
        self.tape.masked_bce(self.output, targets, mask)
    }

    pub fn loss_masked_mse(
        &mut self,
        targets: &Tensor2<S>,
        mask: &Tensor2<S>,
    ) -> Result<Var, NnError> {
        self.tape.masked_mse(self.output, targets, mask)
    }

    /// Runs backward from `loss` and accumulates parameter gradients into
    /// the store they were read from.
    pub fn backprop(&self, loss: Var, store: &mut ParamStore<S>) -> Result<(), NnError> {
        let grads = self.tape.backward(loss)?;
        for (name, var) in &self.param_vars {
            if let Some(g) = grads.get(*var) {
                store.accumulate_grad(name, g);
            }
        }
        Ok(())
    }
}

/// Forward pass in training mode: dropout active, masks drawn from `rng`.
pub fn forward_train<S: Scalar, R: Rng>(
    batch: &GraphBatch<S>,
    store: &ParamStore<S>,
    cfg: &ModelConfig,
    rng: &mut R,
) -> Result<ForwardPass<S>, ModelError> {
    if cfg.dropout > 0.0 {
        let p = cfg.dropout;
        let mut source = |rows: usize, cols: usize| dropout_mask::<S, R>(rows, cols, p, rng);
        run(batch, store, cfg, Some(&mut source))
    } else {
        run(batch, store, cfg, None)
    }
}

/// Forward pass in evaluation mode: dropout is the identity.
pub fn forward_eval<S: Scalar>(
    batch: &GraphBatch<S>,
    store: &ParamStore<S>,
    cfg: &ModelConfig,
) -> Result<ForwardPass<S>, ModelError> {
    run(batch, store, cfg, None)
}

type MaskSource<'a, S> = &'a mut dyn FnMut(usize, usize) -> Tensor2<S>;

fn run<S: Scalar>(
    batch: &GraphBatch<S>,
    store: &ParamStore<S>,
    cfg: &ModelConfig,
    mut masks: Option<MaskSource<'_, S>>,
) -> Result<ForwardPass<S>, ModelError> {
    cfg.validate()?;
    let mut tape = Tape::new();
    let mut param_vars = Vec::new();
    let mut leaf = |tape: &mut Tape<S>, name: &str| -> Result<Var, NnError> {
        let var = tape.leaf(store.get(name).clone())?;
        param_vars.push((name.to_string(), var));
        Ok(var)
    };

    let core_names = ["w_i", "w_m", "w_o"];
    let mut core = Vec::new();
    for name in core_names {
        core.push(leaf(&mut tape, name)?);
    }
    let ffn_names = ["ffn_w1", "ffn_b1", "ffn_w2", "ffn_b2", "ffn_w3", "ffn_b3"];
    let mut ffn = Vec::new();
    for name in ffn_names {
        ffn.push(leaf(&mut tape, name)?);
    }

    let x = tape.constant(batch.node_features.clone())?;
    let e = tape.constant(batch.arc_features.clone())?;

    let node_states = match cfg.architecture {
        Architecture::Mpnn => mpnn::node_states(&mut tape, batch, x, e, core[0], core[1], core[2], cfg.steps)?,
        Architecture::Dmpnn => dmpnn::node_states(&mut tape, batch, x, e, core[0], core[1], core[2], cfg.steps)?,
    };

    // dropout after message passing, then pooling, then the FFN head with
    // dropout after each hidden activation
    let mut apply_dropout = |tape: &mut Tape<S>, v: Var| -> Result<Var, NnError> {
        match masks.as_mut() {
            Some(source) => {
                let (r, c) = tape.shape(v);
                let mask = source(r, c);
                tape.mul_mask(v, mask)
            }
            None => Ok(v),
        }
    };

    let states = apply_dropout(&mut tape, node_states)?;
    let pooled = match cfg.readout {
        Readout::Mean => tape.segment_mean(states, batch.graph_ids.clone(), batch.num_graphs)?,
        Readout::Sum => tape.segment_sum(states, batch.graph_ids.clone(), batch.num_graphs)?,
    };

    let z1 = tape.matmul_t(pooled, ffn[0])?;
    let z1 = tape.add_row(z1, ffn[1])?;
    let z1 = tape.relu(z1)?;
    let z1 = apply_dropout(&mut tape, z1)?;
    let z2 = tape.matmul_t(z1, ffn[2])?;
    let z2 = tape.add_row(z2, ffn[3])?;
    let z2 = tape.relu(z2)?;
    let z2 = apply_dropout(&mut tape, z2)?;
    let out = tape.matmul_t(z2, ffn[4])?;
    let out = tape.add_row(out, ffn[5])?;

    Ok(ForwardPass {
        tape,
        output: out,
        param_vars,
    })
}
