//! Small differentiable building blocks: dense networks with hand-written
//! backprop, categorical autoregressive sequence models, Adagrad, gradient
//! checking and a binary parameter snapshot format.

mod adagrad;
mod dense;
mod gradcheck;
mod policy;
mod snapshot;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use adagrad::{AdagradState, DEFAULT_DAMPING};
pub use dense::{Activation, DenseNet, Trace};
pub use gradcheck::{central_differences, relative_error, FD_STEP};
pub use policy::{log_softmax, ARPolicy};
pub use snapshot::{read_snapshot, write_snapshot, Snapshot, SNAPSHOT_MAGIC, SNAPSHOT_VERSION};

/// Dense row-major array of finite doubles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "shape {shape:?} needs {n} values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("tensor has a non-finite value".into()));
        }
        Ok(Self { shape, values })
    }

    pub fn vector(values: Vec<f64>) -> Result<Self> {
        Self::new(vec![values.len()], values)
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            values: vec![0.0; n],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}
