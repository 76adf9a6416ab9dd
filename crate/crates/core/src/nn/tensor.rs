//! Dense (batch, channels, length) tensor with an optional gradient slot.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },
    #[error("backward called without a recorded forward pass")]
    BackwardWithoutForward,
    #[error("non-finite loss at epoch {epoch}, batch {batch} (seed {seed})")]
    NonFiniteLoss { epoch: usize, batch: usize, seed: u64 },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

/// Row-major data: `index = (b * channels + c) * length + i`.
#[derive(Debug, Clone)]
pub struct Tensor {
    pub batch: usize,
    pub channels: usize,
    pub length: usize,
    pub data: Vec<f64>,
    pub grad: Option<Vec<f64>>,
}

impl Tensor {
    pub fn zeros(batch: usize, channels: usize, length: usize) -> Self {
        Self {
            batch,
            channels,
            length,
            data: vec![0.0; batch * channels * length],
            grad: None,
        }
    }

    pub fn from_data(batch: usize, channels: usize, length: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), batch * channels * length, "tensor data length");
        Self { batch, channels, length, data, grad: None }
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.batch, self.channels, self.length)
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    /// Per-sample plane size (channels * length).
    pub fn plane(&self) -> usize {
        self.channels * self.length
    }

    pub fn sample(&self, b: usize) -> &[f64] {
        let p = self.plane();
        &self.data[b * p..(b + 1) * p]
    }

    pub fn same_shape(&self, other: &Tensor) -> bool {
        self.shape() == other.shape()
    }

    pub fn ensure_grad(&mut self) -> &mut Vec<f64> {
        if self.grad.is_none() {
            self.grad = Some(vec![0.0; self.data.len()]);
        }
        self.grad.as_mut().unwrap()
    }
}

pub(crate) fn shape_err(expected: impl std::fmt::Debug, got: impl std::fmt::Debug) -> NnError {
    NnError::ShapeMismatch {
        expected: format!("{expected:?}"),
        got: format!("{got:?}"),
    }
}
