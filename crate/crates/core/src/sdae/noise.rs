use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::Rng;

/// Corruption parameters: word deletion probability and bigram swap probability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub p_drop: f64,
    pub p_swap: f64,
}

impl NoiseParams {
    /// No corruption: the plain sequential autoencoder.
    pub const NONE: NoiseParams = NoiseParams {
        p_drop: 0.0,
        p_swap: 0.0,
    };

    pub fn new(p_drop: f64, p_swap: f64) -> Result<Self> {
        let n = NoiseParams { p_drop, p_swap };
        n.validate()?;
        Ok(n)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p_drop", self.p_drop), ("p_swap", self.p_swap)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        self.p_drop == 0.0 && self.p_swap == 0.0
    }
}

impl Default for NoiseParams {
    fn default() -> Self {
        NoiseParams {
            p_drop: 0.1,
            p_swap: 0.1,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CorruptionStats {
    pub deleted: usize,
    pub swaps: usize,
}

/// Deletes each token independently with probability `p_drop`, then walks
/// the surviving tokens in non-overlapping left-to-right pairs and swaps each
/// pair with probability `p_swap`.
pub fn corrupt<T: Clone>(tokens: &[T], noise: NoiseParams, rng: &mut Rng) -> Vec<T> {
    corrupt_with_stats(tokens, noise, rng).0
}

pub fn corrupt_with_stats<T: Clone>(tokens: &[T], noise: NoiseParams, rng: &mut Rng) -> (Vec<T>, CorruptionStats) {
    let mut out: Vec<T> = tokens
        .iter()
        .filter(|_| !rng.gen_bool(noise.p_drop))
        .cloned()
        .collect();
    let mut stats = CorruptionStats {
        deleted: tokens.len() - out.len(),
        swaps: 0,
    };
    let mut i = 0;
    while i + 1 < out.len() {
        if rng.gen_bool(noise.p_swap) {
            out.swap(i, i + 1);
            stats.swaps += 1;
        }
        i += 2;
    }
    (out, stats)
}
