//! Root-mean-square-error loss over every element of the batch.

use super::tensor::{shape_err, NnError, Tensor};

/// Returns `sqrt(mean((pred - target)^2))` and the gradient with respect to
/// `pred`. The gradient of a zero loss is zero (the subgradient choice).
pub fn rmse_loss(pred: &Tensor, target: &Tensor) -> Result<(f64, Tensor), NnError> {
    if !pred.same_shape(target) {
        return Err(shape_err(target.shape(), pred.shape()));
    }
    let n = pred.numel() as f64;
    let mut sq = 0.0;
    for (&p, &t) in pred.data.iter().zip(&target.data) {
        let d = p - t;
        sq += d * d;
    }
    let loss = (sq / n).sqrt();
    let mut grad = Tensor::zeros(pred.batch, pred.channels, pred.length);
    if loss > 0.0 {
        let scale = 1.0 / (n * loss);
        for ((g, &p), &t) in grad.data.iter_mut().zip(&pred.data).zip(&target.data) {
            *g = (p - t) * scale;
        }
    }
    Ok((loss, grad))
}
