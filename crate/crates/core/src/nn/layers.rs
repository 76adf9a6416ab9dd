//! Layers of the denoising autoencoder with explicit forward/backward
//! passes. Each layer caches what its backward pass needs; `backward` before
//! `forward` is an error.
//!
//! Convolutions are lowered to GEMM through im2col/col2im. Work is
//! parallelized per sample; cross-sample gradient reductions accumulate in
//! fixed batch order (chunk results are folded sequentially), so results do
//! not depend on thread count.

use rayon::prelude::*;

use super::gemm::{gemm_nn, gemm_nt, gemm_tn};
use super::tensor::{shape_err, NnError, Tensor};
use crate::rng::Rng;

/// Samples per parallel work unit for batch-level parallelism.
const PAR_CHUNK: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// `out_len = floor((in_len + 2*pad - kernel) / stride) + 1`
pub fn conv_out_len(in_len: usize, kernel: usize, stride: usize, pad: usize) -> Option<usize> {
    let padded = in_len + 2 * pad;
    if padded < kernel {
        return None;
    }
    Some((padded - kernel) / stride + 1)
}

/// `out_len = (in_len - 1)*stride - 2*pad + kernel`
pub fn conv_transpose_out_len(in_len: usize, kernel: usize, stride: usize, pad: usize) -> Option<usize> {
    let grown = (in_len - 1) * stride + kernel;
    if grown < 2 * pad {
        return None;
    }
    Some(grown - 2 * pad)
}

/// Gathers `x` (channels x in_len) into `col` (channels*kernel x out_len):
/// `col[(c*kernel + k) * out_len + j] = x[c, j*stride - pad + k]`, zero
/// outside bounds.
fn im2col(
    x: &[f64],
    channels: usize,
    in_len: usize,
    kernel: usize,
    stride: usize,
    pad: usize,
    out_len: usize,
    col: &mut [f64],
) {
    debug_assert_eq!(col.len(), channels * kernel * out_len);
    for c in 0..channels {
        let xc = &x[c * in_len..(c + 1) * in_len];
        for k in 0..kernel {
            let row = &mut col[(c * kernel + k) * out_len..(c * kernel + k + 1) * out_len];
            let offset = k as isize - pad as isize;
            for (j, slot) in row.iter_mut().enumerate() {
                let src = j as isize * stride as isize + offset;
                *slot = if src >= 0 && (src as usize) < in_len {
                    xc[src as usize]
                } else {
                    0.0
                };
            }
        }
    }
}

/// Scatter-adds `col` back: `x[c, j*stride - pad + k] += col[(c*kernel+k)*out_len + j]`.
fn col2im_add(
    col: &[f64],
    channels: usize,
    in_len: usize,
    kernel: usize,
    stride: usize,
    pad: usize,
    out_len: usize,
    x: &mut [f64],
) {
    debug_assert_eq!(col.len(), channels * kernel * out_len);
    for c in 0..channels {
        let xc = &mut x[c * in_len..(c + 1) * in_len];
        for k in 0..kernel {
            let row = &col[(c * kernel + k) * out_len..(c * kernel + k + 1) * out_len];
            let offset = k as isize - pad as isize;
            for (j, &v) in row.iter().enumerate() {
                let dst = j as isize * stride as isize + offset;
                if dst >= 0 && (dst as usize) < in_len {
                    xc[dst as usize] += v;
                }
            }
        }
    }
}

/// Folds per-chunk (weight grad, bias grad) contributions in chunk order.
fn fold_grads(parts: Vec<(Vec<f64>, Vec<f64>)>, grad_w: &mut [f64], grad_b: &mut [f64]) {
    for (gw, gb) in parts {
        for (acc, v) in grad_w.iter_mut().zip(&gw) {
            *acc += v;
        }
        for (acc, v) in grad_b.iter_mut().zip(&gb) {
            *acc += v;
        }
    }
}

/// 1D convolution (cross-correlation) with stride and zero padding.
/// Weights are (out_ch, in_ch, kernel), row-major.
#[derive(Debug, Clone)]
pub struct Conv1d {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub grad_weights: Vec<f64>,
    pub grad_bias: Vec<f64>,
    cached_input: Option<Tensor>,
}

impl Conv1d {
    pub fn new(in_ch: usize, out_ch: usize, kernel: usize, stride: usize, padding: usize) -> Self {
        Self {
            in_ch,
            out_ch,
            kernel,
            stride,
            padding,
            weights: vec![0.0; out_ch * in_ch * kernel],
            bias: vec![0.0; out_ch],
            grad_weights: vec![0.0; out_ch * in_ch * kernel],
            grad_bias: vec![0.0; out_ch],
            cached_input: None,
        }
    }

    /// Kaiming-uniform fan-in init (bound sqrt(6 / fan_in)), zero bias.
    pub fn init_kaiming(&mut self, rng: &mut Rng) {
        let fan_in = (self.in_ch * self.kernel) as f64;
        let bound = (6.0 / fan_in).sqrt();
        for w in &mut self.weights {
            *w = rng.range_f64(-bound, bound);
        }
        self.bias.fill(0.0);
    }

    pub fn out_len(&self, in_len: usize) -> Option<usize> {
        conv_out_len(in_len, self.kernel, self.stride, self.padding)
    }

    pub fn forward(&mut self, x: &Tensor, _mode: Mode) -> Result<Tensor, NnError> {
        if x.channels != self.in_ch {
            return Err(shape_err(("channels", self.in_ch), ("channels", x.channels)));
        }
        let out_len = self
            .out_len(x.length)
            .ok_or_else(|| shape_err("out_len >= 1", ("in_len", x.length)))?;
        let mut out = Tensor::zeros(x.batch, self.out_ch, out_len);
        let ck = self.in_ch * self.kernel;
        let in_plane = x.plane();
        let out_plane = out.plane();

        out.data
            .par_chunks_mut(out_plane)
            .zip(x.data.par_chunks(in_plane))
            .for_each(|(y, xs)| {
                let mut col = vec![0.0; ck * out_len];
                im2col(xs, self.in_ch, x.length, self.kernel, self.stride, self.padding, out_len, &mut col);
                gemm_nn(self.out_ch, ck, out_len, &self.weights, &col, 0.0, y);
                for c in 0..self.out_ch {
                    let b = self.bias[c];
                    for v in &mut y[c * out_len..(c + 1) * out_len] {
                        *v += b;
                    }
                }
            });

        self.cached_input = Some(x.clone());
        Ok(out)
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor, NnError> {
        let x = self.cached_input.take().ok_or(NnError::BackwardWithoutForward)?;
        let out_len = grad_out.length;
        if grad_out.channels != self.out_ch || Some(out_len) != self.out_len(x.length) {
            return Err(shape_err(("out_ch", self.out_ch), grad_out.shape()));
        }
        let ck = self.in_ch * self.kernel;
        let mut grad_in = Tensor::zeros(x.batch, self.in_ch, x.length);

        // Input gradients: per-sample, no cross-sample coupling.
        grad_in
            .data
            .par_chunks_mut(x.plane())
            .zip(grad_out.data.par_chunks(grad_out.plane()))
            .for_each(|(gx, gy)| {
                let mut col_grad = vec![0.0; ck * out_len];
                gemm_tn(ck, self.out_ch, out_len, &self.weights, gy, 0.0, &mut col_grad);
                col2im_add(&col_grad, self.in_ch, x.length, self.kernel, self.stride, self.padding, out_len, gx);
            });

        // Parameter gradients: chunk-local accumulation, folded in order.
        let chunks: Vec<(Vec<f64>, Vec<f64>)> = x
            .data
            .par_chunks(x.plane() * PAR_CHUNK)
            .zip(grad_out.data.par_chunks(grad_out.plane() * PAR_CHUNK))
            .map(|(xs_chunk, gy_chunk)| {
                let mut gw = vec![0.0; self.out_ch * ck];
                let mut gb = vec![0.0; self.out_ch];
                let mut col = vec![0.0; ck * out_len];
                for (xs, gy) in xs_chunk.chunks(x.plane()).zip(gy_chunk.chunks(grad_out.plane())) {
                    im2col(xs, self.in_ch, x.length, self.kernel, self.stride, self.padding, out_len, &mut col);
                    gemm_nt(self.out_ch, out_len, ck, gy, &col, 1.0, &mut gw);
                    for c in 0..self.out_ch {
                        gb[c] += gy[c * out_len..(c + 1) * out_len].iter().sum::<f64>();
                    }
                }
                (gw, gb)
            })
            .collect();
        fold_grads(chunks, &mut self.grad_weights, &mut self.grad_bias);
        Ok(grad_in)
    }
}

/// 1D transposed convolution. Weights are (in_ch, out_ch, kernel), row-major.
#[derive(Debug, Clone)]
pub struct ConvTranspose1d {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub grad_weights: Vec<f64>,
    pub grad_bias: Vec<f64>,
    cached_input: Option<Tensor>,
}

impl ConvTranspose1d {
    pub fn new(in_ch: usize, out_ch: usize, kernel: usize, stride: usize, padding: usize) -> Self {
        Self {
            in_ch,
            out_ch,
            kernel,
            stride,
            padding,
            weights: vec![0.0; in_ch * out_ch * kernel],
            bias: vec![0.0; out_ch],
            grad_weights: vec![0.0; in_ch * out_ch * kernel],
            grad_bias: vec![0.0; out_ch],
            cached_input: None,
        }
    }

    pub fn init_kaiming(&mut self, rng: &mut Rng) {
        let fan_in = (self.in_ch * self.kernel) as f64;
        let bound = (6.0 / fan_in).sqrt();
        for w in &mut self.weights {
            *w = rng.range_f64(-bound, bound);
        }
        self.bias.fill(0.0);
    }

    pub fn out_len(&self, in_len: usize) -> Option<usize> {
        conv_transpose_out_len(in_len, self.kernel, self.stride, self.padding)
    }

    pub fn forward(&mut self, x: &Tensor, _mode: Mode) -> Result<Tensor, NnError> {
        if x.channels != self.in_ch {
            return Err(shape_err(("channels", self.in_ch), ("channels", x.channels)));
        }
        let out_len = self
            .out_len(x.length)
            .ok_or_else(|| shape_err("out_len >= 1", ("in_len", x.length)))?;
        let ck = self.out_ch * self.kernel;
        let mut out = Tensor::zeros(x.batch, self.out_ch, out_len);
        let out_plane = out.plane();

        out.data
            .par_chunks_mut(out_plane)
            .zip(x.data.par_chunks(x.plane()))
            .for_each(|(y, xs)| {
                // col = W^T (ck x in_ch) * x (in_ch x in_len), then scatter
                // col rows into the stretched output.
                let mut col = vec![0.0; ck * x.length];
                gemm_tn(ck, self.in_ch, x.length, &self.weights, xs, 0.0, &mut col);
                col2im_add(&col, self.out_ch, out_len, self.kernel, self.stride, self.padding, x.length, y);
                for c in 0..self.out_ch {
                    let b = self.bias[c];
                    for v in &mut y[c * out_len..(c + 1) * out_len] {
                        *v += b;
                    }
                }
            });

        self.cached_input = Some(x.clone());
        Ok(out)
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor, NnError> {
        let x = self.cached_input.take().ok_or(NnError::BackwardWithoutForward)?;
        let out_len = grad_out.length;
        if grad_out.channels != self.out_ch || Some(out_len) != self.out_len(x.length) {
            return Err(shape_err(("out_ch", self.out_ch), grad_out.shape()));
        }
        let ck = self.out_ch * self.kernel;
        let mut grad_in = Tensor::zeros(x.batch, self.in_ch, x.length);

        grad_in
            .data
            .par_chunks_mut(x.plane())
            .zip(grad_out.data.par_chunks(grad_out.plane()))
            .for_each(|(gx, gy)| {
                // grad_x = W (in_ch x ck) * gather(grad_out) (ck x in_len)
                let mut col = vec![0.0; ck * x.length];
                im2col(gy, self.out_ch, out_len, self.kernel, self.stride, self.padding, x.length, &mut col);
                gemm_nn(self.in_ch, ck, x.length, &self.weights, &col, 0.0, gx);
            });

        let chunks: Vec<(Vec<f64>, Vec<f64>)> = x
            .data
            .par_chunks(x.plane() * PAR_CHUNK)
            .zip(grad_out.data.par_chunks(grad_out.plane() * PAR_CHUNK))
            .map(|(xs_chunk, gy_chunk)| {
                let mut gw = vec![0.0; self.in_ch * ck];
                let mut gb = vec![0.0; self.out_ch];
                let mut col = vec![0.0; ck * x.length];
                for (xs, gy) in xs_chunk.chunks(x.plane()).zip(gy_chunk.chunks(grad_out.plane())) {
                    im2col(gy, self.out_ch, out_len, self.kernel, self.stride, self.padding, x.length, &mut col);
                    // grad_W (in_ch x ck) += x (in_ch x in_len) * col^T
                    gemm_nt(self.in_ch, x.length, ck, xs, &col, 1.0, &mut gw);
                    for c in 0..self.out_ch {
                        gb[c] += gy[c * out_len..(c + 1) * out_len].iter().sum::<f64>();
                    }
                }
                (gw, gb)
            })
            .collect();
        fold_grads(chunks, &mut self.grad_weights, &mut self.grad_bias);
        Ok(grad_in)
    }
}

/// Batch normalization over (batch, length) per channel.
#[derive(Debug, Clone)]
pub struct BatchNorm1d {
    pub channels: usize,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub grad_gamma: Vec<f64>,
    pub grad_beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub momentum: f64,
    pub eps: f64,
    cache: Option<BnCache>,
}

#[derive(Debug, Clone)]
struct BnCache {
    normalized: Tensor,
    inv_std: Vec<f64>,
    mode: Mode,
}

impl BatchNorm1d {
    pub fn new(channels: usize) -> Self {
        Self {
            channels,
            gamma: vec![1.0; channels],
            beta: vec![0.0; channels],
            grad_gamma: vec![0.0; channels],
            grad_beta: vec![0.0; channels],
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
            momentum: 0.1,
            eps: 1e-5,
            cache: None,
        }
    }

    pub fn forward(&mut self, x: &Tensor, mode: Mode) -> Result<Tensor, NnError> {
        if x.channels != self.channels {
            return Err(shape_err(("channels", self.channels), ("channels", x.channels)));
        }
        let m = (x.batch * x.length) as f64;
        let mut out = Tensor::zeros(x.batch, x.channels, x.length);
        let mut normalized = Tensor::zeros(x.batch, x.channels, x.length);
        let mut inv_std = vec![0.0; self.channels];

        for c in 0..self.channels {
            let (mean, var) = match mode {
                Mode::Train => {
                    let mut sum = 0.0;
                    for b in 0..x.batch {
                        let base = (b * x.channels + c) * x.length;
                        sum += x.data[base..base + x.length].iter().sum::<f64>();
                    }
                    let mean = sum / m;
                    let mut sq = 0.0;
                    for b in 0..x.batch {
                        let base = (b * x.channels + c) * x.length;
                        for &v in &x.data[base..base + x.length] {
                            let d = v - mean;
                            sq += d * d;
                        }
                    }
                    let var = sq / m;
                    // Running stats use the unbiased variance.
                    let unbiased = if m > 1.0 { sq / (m - 1.0) } else { var };
                    self.running_mean[c] =
                        (1.0 - self.momentum) * self.running_mean[c] + self.momentum * mean;
                    self.running_var[c] =
                        (1.0 - self.momentum) * self.running_var[c] + self.momentum * unbiased;
                    (mean, var)
                }
                Mode::Eval => (self.running_mean[c], self.running_var[c]),
            };
            let istd = 1.0 / (var + self.eps).sqrt();
            inv_std[c] = istd;
            let g = self.gamma[c];
            let bta = self.beta[c];
            for b in 0..x.batch {
                let base = (b * x.channels + c) * x.length;
                for i in 0..x.length {
                    let xhat = (x.data[base + i] - mean) * istd;
                    normalized.data[base + i] = xhat;
                    out.data[base + i] = g * xhat + bta;
                }
            }
        }

        self.cache = Some(BnCache { normalized, inv_std, mode });
        Ok(out)
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor, NnError> {
        let cache = self.cache.take().ok_or(NnError::BackwardWithoutForward)?;
        let xhat = &cache.normalized;
        if !grad_out.same_shape(xhat) {
            return Err(shape_err(xhat.shape(), grad_out.shape()));
        }
        let m = (grad_out.batch * grad_out.length) as f64;
        let mut grad_in = Tensor::zeros(grad_out.batch, grad_out.channels, grad_out.length);

        for c in 0..self.channels {
            let mut sum_dy = 0.0;
            let mut sum_dy_xhat = 0.0;
            for b in 0..grad_out.batch {
                let base = (b * grad_out.channels + c) * grad_out.length;
                for i in 0..grad_out.length {
                    let dy = grad_out.data[base + i];
                    sum_dy += dy;
                    sum_dy_xhat += dy * xhat.data[base + i];
                }
            }
            self.grad_beta[c] += sum_dy;
            self.grad_gamma[c] += sum_dy_xhat;

            let g = self.gamma[c];
            let istd = cache.inv_std[c];
            match cache.mode {
                Mode::Train => {
                    // dx = g*istd/m * (m*dy - sum_dy - xhat * sum(dy*xhat))
                    let k = g * istd / m;
                    for b in 0..grad_out.batch {
                        let base = (b * grad_out.channels + c) * grad_out.length;
                        for i in 0..grad_out.length {
                            let dy = grad_out.data[base + i];
                            grad_in.data[base + i] =
                                k * (m * dy - sum_dy - xhat.data[base + i] * sum_dy_xhat);
                        }
                    }
                }
                Mode::Eval => {
                    let k = g * istd;
                    for b in 0..grad_out.batch {
                        let base = (b * grad_out.channels + c) * grad_out.length;
                        for i in 0..grad_out.length {
                            grad_in.data[base + i] = k * grad_out.data[base + i];
                        }
                    }
                }
            }
        }
        Ok(grad_in)
    }
}

/// ReLU; the subgradient at 0 is 0.
#[derive(Debug, Clone, Default)]
pub struct Relu {
    cached_input: Option<Tensor>,
}

impl Relu {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn forward(&mut self, x: &Tensor, _mode: Mode) -> Result<Tensor, NnError> {
        let mut out = x.clone();
        for v in &mut out.data {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        self.cached_input = Some(x.clone());
        Ok(out)
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor, NnError> {
        let x = self.cached_input.take().ok_or(NnError::BackwardWithoutForward)?;
        if !grad_out.same_shape(&x) {
            return Err(shape_err(x.shape(), grad_out.shape()));
        }
        let mut grad_in = grad_out.clone();
        for (g, &v) in grad_in.data.iter_mut().zip(&x.data) {
            if v <= 0.0 {
                *g = 0.0;
            }
        }
        Ok(grad_in)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Sigmoid {
    cached_output: Option<Tensor>,
}

impl Sigmoid {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn forward(&mut self, x: &Tensor, _mode: Mode) -> Result<Tensor, NnError> {
        let mut out = x.clone();
        for v in &mut out.data {
            *v = 1.0 / (1.0 + (-*v).exp());
        }
        self.cached_output = Some(out.clone());
        Ok(out)
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor, NnError> {
        let y = self.cached_output.take().ok_or(NnError::BackwardWithoutForward)?;
        if !grad_out.same_shape(&y) {
            return Err(shape_err(y.shape(), grad_out.shape()));
        }
        let mut grad_in = grad_out.clone();
        for (g, &s) in grad_in.data.iter_mut().zip(&y.data) {
            *g *= s * (1.0 - s);
        }
        Ok(grad_in)
    }
}
