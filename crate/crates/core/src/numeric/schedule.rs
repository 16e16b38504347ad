use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest vocabulary trained with the exact softmax when no negative-sample
/// count is configured; larger vocabularies fall back to 5 negatives.
pub const EXACT_SOFTMAX_MAX_VOCAB: usize = 20_000;

const FALLBACK_NEGATIVES: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub dim: usize,
    pub epochs: usize,
    pub lr0: f64,
    pub lr_min: f64,
    pub seed: u64,
    pub workers: usize,
    /// 0 selects the exact softmax where the model supports it.
    pub negative_samples: usize,
    /// Frequent-word subsampling threshold; 0 disables it.
    pub subsample: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 100,
            epochs: 1,
            lr0: 0.025,
            lr_min: 1e-4,
            seed: 1,
            workers: 1,
            negative_samples: 0,
            subsample: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidArgument("dim must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be at least 1".into()));
        }
        if !(self.lr_min > 0.0 && self.lr_min <= self.lr0) {
            return Err(Error::InvalidArgument(format!(
                "learning rates must satisfy 0 < lr_min <= lr0 (got lr_min={}, lr0={})",
                self.lr_min, self.lr0
            )));
        }
        if self.workers == 0 {
            return Err(Error::InvalidArgument("workers must be at least 1".into()));
        }
        if self.subsample < 0.0 {
            return Err(Error::InvalidArgument("subsample must be non-negative".into()));
        }
        Ok(())
    }

    /// Negative samples to use for a vocabulary of `vocab` words; 0 means exact softmax.
    pub fn effective_negatives(&self, vocab: usize) -> usize {
        if self.negative_samples > 0 {
            self.negative_samples
        } else if vocab > EXACT_SOFTMAX_MAX_VOCAB {
            FALLBACK_NEGATIVES
        } else {
            0
        }
    }
}

/// Linear decay from `lr0` to `lr_min` over training progress in `[0, 1]`.
pub fn lr_at(progress: f64, cfg: &TrainConfig) -> f64 {
    linear_decay(progress, cfg.lr0, cfg.lr_min)
}

pub fn linear_decay(progress: f64, lr0: f64, lr_min: f64) -> f64 {
    let p = if progress.is_nan() { 0.0 } else { progress.clamp(0.0, 1.0) };
    (lr0 * (1.0 - p)).max(lr_min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(lr0: f64, lr_min: f64) -> TrainConfig {
        TrainConfig {
            lr0,
            lr_min,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn decay_endpoints_and_midpoint() {
        let c = cfg(0.025, 1e-4);
        assert_eq!(lr_at(0.0, &c), 0.025);
        assert_eq!(lr_at(1.0, &c), 1e-4);
        assert!((lr_at(0.5, &c) - 0.0125).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_progress_is_clamped() {
        let c = cfg(0.025, 1e-4);
        assert_eq!(lr_at(-3.0, &c), 0.025);
        assert_eq!(lr_at(7.0, &c), 1e-4);
    }

    #[test]
    fn validation() {
        assert!(TrainConfig::default().validate().is_ok());
        assert!(cfg(0.01, 0.1).validate().is_err());
        assert!(cfg(0.01, 0.0).validate().is_err());
        assert!(TrainConfig { dim: 0, ..TrainConfig::default() }.validate().is_err());
        assert!(TrainConfig { epochs: 0, ..TrainConfig::default() }.validate().is_err());
    }

    #[test]
    fn negative_sampling_switch() {
        let c = TrainConfig::default();
        assert_eq!(c.effective_negatives(EXACT_SOFTMAX_MAX_VOCAB), 0);
        assert_eq!(c.effective_negatives(EXACT_SOFTMAX_MAX_VOCAB + 1), 5);
        let c = TrainConfig { negative_samples: 3, ..c };
        assert_eq!(c.effective_negatives(10), 3);
    }
}
