use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_DAMPING: f64 = 1e-8;

/// Adagrad: `G += g^2`, then `θ -= η g / sqrt(G + δ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdagradState {
    pub lr: f64,
    pub damping: f64,
    accum: Vec<f64>,
}

impl AdagradState {
    pub fn new(num_params: usize, lr: f64) -> Self {
        Self::with_damping(num_params, lr, DEFAULT_DAMPING)
    }

    pub fn with_damping(num_params: usize, lr: f64, damping: f64) -> Self {
        Self {
            lr,
            damping,
            accum: vec![0.0; num_params],
        }
    }

    pub fn accumulators(&self) -> &[f64] {
        &self.accum
    }

    pub fn update(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.accum.len() || grads.len() != self.accum.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} params / {} grads for an optimizer over {}",
                params.len(),
                grads.len(),
                self.accum.len()
            )));
        }
        for ((p, &g), acc) in params.iter_mut().zip(grads).zip(&mut self.accum) {
            *acc += g * g;
            *p -= self.lr * g / (*acc + self.damping).sqrt();
        }
        Ok(())
    }
}
