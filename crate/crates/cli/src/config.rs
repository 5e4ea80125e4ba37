//! Run configuration: model, optimizer, regularization, and protocol
//! settings, loadable from JSON with every field optional.

use crate::PipelineError;
use funqg_core::hash::Fnv64;
use funqg_core::model::{Architecture, ModelConfig, Readout};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub architecture: Architecture,
    pub hidden_size: usize,
    pub message_steps: usize,
    pub ffn_hidden: usize,
    pub dropout: f64,
    pub readout: Readout,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Row-norm cap; `null` disables max-norm.
    pub max_norm: Option<f64>,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub split_seeds: Vec<u64>,
    pub rng_seed: u64,
    /// Train on quotient graphs (true) or raw molecular graphs (false).
    pub coarsen: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            architecture: Architecture::Dmpnn,
            hidden_size: 160,
            message_steps: 3,
            ffn_hidden: 160,
            dropout: 0.1,
            readout: Readout::Mean,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            max_norm: Some(3.0),
            batch_size: 32,
            max_epochs: 100,
            patience: 15,
            split_seeds: vec![1, 2, 3],
            rng_seed: 0,
            coarsen: true,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |msg: &str| Err(PipelineError::BadConfig(msg.to_string()));
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if self.patience == 0 {
            return bad("patience must be >= 1");
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be >= 1");
        }
        if self.split_seeds.is_empty() {
            return bad("split_seeds must not be empty");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must be in [0, 1)");
        }
        if self.lr <= 0.0 || !self.lr.is_finite() {
            return bad("lr must be positive");
        }
        if let Some(c) = self.max_norm {
            if c <= 0.0 {
                return bad("max_norm must be positive");
            }
        }
        if self.hidden_size == 0 || self.message_steps == 0 || self.ffn_hidden == 0 {
            return bad("hidden_size, message_steps, ffn_hidden must be >= 1");
        }
        Ok(())
    }

    pub fn model_config(&self, tasks: usize) -> ModelConfig {
        ModelConfig {
            architecture: self.architecture,
            hidden: self.hidden_size,
            steps: self.message_steps,
            ffn_hidden: self.ffn_hidden,
            dropout: self.dropout,
            readout: self.readout,
            tasks,
        }
    }

    /// Stable 16-hex-digit digest of the canonical JSON encoding; recorded
    /// in every report so runs can be traced to their configuration.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let mut h = Fnv64::new();
        h.write(json.as_bytes());
        format!("{:016x}", h.finish())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_digest_is_stable() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.digest(), cfg.clone().digest());
        let mut other = cfg.clone();
        other.hidden_size += 1;
        assert_ne!(cfg.digest(), other.digest());
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"hidden_size": 64}"#).unwrap();
        assert_eq!(cfg.hidden_size, 64);
        assert_eq!(cfg.message_steps, RunConfig::default().message_steps);
    }

    #[test]
    fn bad_values_rejected() {
        for json in [
            r#"{"batch_size": 0}"#,
            r#"{"patience": 0}"#,
            r#"{"dropout": 1.0}"#,
            r#"{"max_norm": -2.0}"#,
        ] {
            let cfg: RunConfig = serde_json::from_str(json).unwrap();
            assert!(cfg.validate().is_err(), "{json} should fail");
        }
    }
}
