//! The denoising autoencoder: a fixed encoder/decoder stack built from the
//! layer primitives, plus checkpoint save/load.
//!
//! Encoder: conv blocks (conv -> ReLU -> BatchNorm), kernel 8, stride 2,
//! padding 3, halving the length per block. Decoder: mirrored transposed-conv
//! blocks doubling the length, then a final kernel-7 convolution with a
//! sigmoid that maps back to one channel in [0, 1].

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine as _;
use serde::{Deserialize, Serialize};

use super::adam::{AdamConfig, AdamState};
use super::layers::{BatchNorm1d, Conv1d, ConvTranspose1d, Mode, Relu, Sigmoid};
use super::tensor::{NnError, Tensor};
use crate::rng::Rng;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DaeArchitecture {
    pub input_len: usize,
    pub encoder_channels: Vec<usize>,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub final_kernel: usize,
}

impl DaeArchitecture {
    /// Input length 1920 (30 s at 64 Hz), six conv blocks
    /// 1->16->32->64->96->128->160 (lengths 1920->960->480->240->120->60->30),
    /// mirrored decoder, final kernel-7 conv + sigmoid. Six halvings give
    /// the network a receptive field near 14 s, so every position inside the
    /// longest artifact bursts it has to fill still sees clean signal on
    /// both sides to anchor beat phase.
    pub fn standard() -> Self {
        Self {
            input_len: 1920,
            encoder_channels: vec![16, 32, 64, 96, 128, 160],
            kernel: 8,
            stride: 2,
            padding: 3,
            final_kernel: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub enum LayerKind {
    Conv(Conv1d),
    ConvT(ConvTranspose1d),
    Bn(BatchNorm1d),
    Relu(Relu),
    Sigmoid(Sigmoid),
}

impl LayerKind {
    fn forward(&mut self, x: &Tensor, mode: Mode) -> Result<Tensor, NnError> {
        match self {
            LayerKind::Conv(l) => l.forward(x, mode),
            LayerKind::ConvT(l) => l.forward(x, mode),
            LayerKind::Bn(l) => l.forward(x, mode),
            LayerKind::Relu(l) => l.forward(x, mode),
            LayerKind::Sigmoid(l) => l.forward(x, mode),
        }
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor, NnError> {
        match self {
            LayerKind::Conv(l) => l.backward(grad),
            LayerKind::ConvT(l) => l.backward(grad),
            LayerKind::Bn(l) => l.backward(grad),
            LayerKind::Relu(l) => l.backward(grad),
            LayerKind::Sigmoid(l) => l.backward(grad),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DaeModel {
    pub arch: DaeArchitecture,
    pub layers: Vec<LayerKind>,
    forward_ran: bool,
}

impl DaeModel {
    pub fn new(arch: DaeArchitecture, seed: u64) -> Self {
        let mut rng = Rng::seed_from(seed);
        let mut layers = Vec::new();
        let chans = &arch.encoder_channels;
        assert!(!chans.is_empty());

        let mut in_ch = 1;
        for &out_ch in chans {
            let mut conv = Conv1d::new(in_ch, out_ch, arch.kernel, arch.stride, arch.padding);
            conv.init_kaiming(&mut rng);
            layers.push(LayerKind::Conv(conv));
            layers.push(LayerKind::Relu(Relu::new()));
            layers.push(LayerKind::Bn(BatchNorm1d::new(out_ch)));
            in_ch = out_ch;
        }

        // Decoder mirrors the encoder; the last block keeps its width.
        let mut decoder_out: Vec<usize> = chans.iter().rev().skip(1).cloned().collect();
        decoder_out.push(chans[0]);
        for &out_ch in &decoder_out {
            let mut deconv =
                ConvTranspose1d::new(in_ch, out_ch, arch.kernel, arch.stride, arch.padding);
            deconv.init_kaiming(&mut rng);
            layers.push(LayerKind::ConvT(deconv));
            layers.push(LayerKind::Relu(Relu::new()));
            layers.push(LayerKind::Bn(BatchNorm1d::new(out_ch)));
            in_ch = out_ch;
        }

        let mut head = Conv1d::new(in_ch, 1, arch.final_kernel, 1, (arch.final_kernel - 1) / 2);
        head.init_kaiming(&mut rng);
        layers.push(LayerKind::Conv(head));
        layers.push(LayerKind::Sigmoid(Sigmoid::new()));

        Self { arch, layers, forward_ran: false }
    }

    pub fn forward(&mut self, x: &Tensor, mode: Mode) -> Result<Tensor, NnError> {
        let mut cur = x.clone();
        for layer in &mut self.layers {
            cur = layer.forward(&cur, mode)?;
        }
        self.forward_ran = true;
        Ok(cur)
    }

    /// Propagates the loss gradient back to the input, accumulating parameter
    /// gradients along the way.
    pub fn backward(&mut self, grad_loss: &Tensor) -> Result<Tensor, NnError> {
        if !self.forward_ran {
            return Err(NnError::BackwardWithoutForward);
        }
        self.forward_ran = false;
        let mut grad = grad_loss.clone();
        for layer in self.layers.iter_mut().rev() {
            grad = layer.backward(&grad)?;
        }
        Ok(grad)
    }

    /// Inference pass on an immutable model (no caches, BatchNorm in Eval
    /// mode); safe to call concurrently.
    pub fn infer(&self, x: &Tensor) -> Result<Tensor, NnError> {
        let mut model = self.clone();
        model.forward(x, Mode::Eval)
    }

    pub fn zero_grads(&mut self) {
        self.visit_grads_mut(|g| g.fill(0.0));
    }

    fn visit_grads_mut(&mut self, mut f: impl FnMut(&mut Vec<f64>)) {
        for layer in &mut self.layers {
            match layer {
                LayerKind::Conv(l) => {
                    f(&mut l.grad_weights);
                    f(&mut l.grad_bias);
                }
                LayerKind::ConvT(l) => {
                    f(&mut l.grad_weights);
                    f(&mut l.grad_bias);
                }
                LayerKind::Bn(l) => {
                    f(&mut l.grad_gamma);
                    f(&mut l.grad_beta);
                }
                _ => {}
            }
        }
    }

    /// Sizes of the parameter groups in visit order (for optimizer setup).
    pub fn group_sizes(&self) -> Vec<usize> {
        let mut sizes = Vec::new();
        for layer in &self.layers {
            match layer {
                LayerKind::Conv(l) => {
                    sizes.push(l.weights.len());
                    sizes.push(l.bias.len());
                }
                LayerKind::ConvT(l) => {
                    sizes.push(l.weights.len());
                    sizes.push(l.bias.len());
                }
                LayerKind::Bn(l) => {
                    sizes.push(l.gamma.len());
                    sizes.push(l.beta.len());
                }
                _ => {}
            }
        }
        sizes
    }

    pub fn param_count(&self) -> usize {
        self.group_sizes().iter().sum()
    }

    /// One Adam step over all parameter groups in visit order.
    pub fn adam_step(&mut self, state: &mut AdamState) {
        state.begin_step();
        let mut group = 0;
        for layer in &mut self.layers {
            match layer {
                LayerKind::Conv(l) => {
                    state.update_group(group, &mut l.weights, &l.grad_weights);
                    state.update_group(group + 1, &mut l.bias, &l.grad_bias);
                    group += 2;
                }
                LayerKind::ConvT(l) => {
                    state.update_group(group, &mut l.weights, &l.grad_weights);
                    state.update_group(group + 1, &mut l.bias, &l.grad_bias);
                    group += 2;
                }
                LayerKind::Bn(l) => {
                    state.update_group(group, &mut l.gamma, &l.grad_gamma);
                    state.update_group(group + 1, &mut l.beta, &l.grad_beta);
                    group += 2;
                }
                _ => {}
            }
        }
    }

    pub fn new_adam(&self, cfg: AdamConfig) -> AdamState {
        AdamState::new(cfg, &self.group_sizes())
    }
}

// --- checkpoint serialization -----------------------------------------------

const CHECKPOINT_VERSION: u32 = 1;

fn encode_f64s(values: &[f64]) -> String {
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    B64.encode(bytes)
}

fn decode_f64s(text: &str, expect_len: usize) -> Result<Vec<f64>, NnError> {
    let bytes = B64
        .decode(text)
        .map_err(|e| NnError::Checkpoint(format!("bad base64: {e}")))?;
    if bytes.len() != expect_len * 8 {
        return Err(NnError::Checkpoint(format!(
            "tensor byte length {} does not match expected {}",
            bytes.len(),
            expect_len * 8
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    /// Producing command and seed, for provenance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<String>,
    arch: DaeArchitecture,
    layers: Vec<LayerSnapshot>,
}

#[derive(Serialize, Deserialize)]
enum LayerSnapshot {
    Conv { weights: String, bias: String },
    ConvT { weights: String, bias: String },
    Bn { gamma: String, beta: String, running_mean: String, running_var: String },
    Relu,
    Sigmoid,
}

impl DaeModel {
    pub fn to_checkpoint_json(&self) -> String {
        self.to_checkpoint_json_with_meta(None)
    }

    /// Serializes with an optional provenance note (producing command and
    /// seed).
    pub fn to_checkpoint_json_with_meta(&self, meta: Option<&str>) -> String {
        let layers = self
            .layers
            .iter()
            .map(|layer| match layer {
                LayerKind::Conv(l) => LayerSnapshot::Conv {
                    weights: encode_f64s(&l.weights),
                    bias: encode_f64s(&l.bias),
                },
                LayerKind::ConvT(l) => LayerSnapshot::ConvT {
                    weights: encode_f64s(&l.weights),
                    bias: encode_f64s(&l.bias),
                },
                LayerKind::Bn(l) => LayerSnapshot::Bn {
                    gamma: encode_f64s(&l.gamma),
                    beta: encode_f64s(&l.beta),
                    running_mean: encode_f64s(&l.running_mean),
                    running_var: encode_f64s(&l.running_var),
                },
                LayerKind::Relu(_) => LayerSnapshot::Relu,
                LayerKind::Sigmoid(_) => LayerSnapshot::Sigmoid,
            })
            .collect();
        let ckpt = Checkpoint {
            version: CHECKPOINT_VERSION,
            meta: meta.map(str::to_string),
            arch: self.arch.clone(),
            layers,
        };
        serde_json::to_string(&ckpt).expect("checkpoint serialization")
    }

    pub fn from_checkpoint_json(text: &str) -> Result<Self, NnError> {
        let ckpt: Checkpoint = serde_json::from_str(text)
            .map_err(|e| NnError::Checkpoint(format!("parse error: {e}")))?;
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(NnError::Checkpoint(format!(
                "unsupported checkpoint version {}",
                ckpt.version
            )));
        }
        let mut model = DaeModel::new(ckpt.arch.clone(), 0);
        if ckpt.layers.len() != model.layers.len() {
            return Err(NnError::Checkpoint(format!(
                "layer count {} does not match architecture ({})",
                ckpt.layers.len(),
                model.layers.len()
            )));
        }
        for (layer, snap) in model.layers.iter_mut().zip(ckpt.layers) {
            match (layer, snap) {
                (LayerKind::Conv(l), LayerSnapshot::Conv { weights, bias }) => {
                    l.weights = decode_f64s(&weights, l.weights.len())?;
                    l.bias = decode_f64s(&bias, l.bias.len())?;
                }
                (LayerKind::ConvT(l), LayerSnapshot::ConvT { weights, bias }) => {
                    l.weights = decode_f64s(&weights, l.weights.len())?;
                    l.bias = decode_f64s(&bias, l.bias.len())?;
                }
                (LayerKind::Bn(l), LayerSnapshot::Bn { gamma, beta, running_mean, running_var }) => {
                    l.gamma = decode_f64s(&gamma, l.gamma.len())?;
                    l.beta = decode_f64s(&beta, l.beta.len())?;
                    l.running_mean = decode_f64s(&running_mean, l.running_mean.len())?;
                    l.running_var = decode_f64s(&running_var, l.running_var.len())?;
                }
                (LayerKind::Relu(_), LayerSnapshot::Relu) => {}
                (LayerKind::Sigmoid(_), LayerSnapshot::Sigmoid) => {}
                _ => {
                    return Err(NnError::Checkpoint("layer kind mismatch".into()));
                }
            }
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_maps_1920_to_1920_in_unit_range() {
        let mut model = DaeModel::new(DaeArchitecture::standard(), 42);
        let x = Tensor::from_data(2, 1, 1920, (0..2 * 1920).map(|i| (i % 7) as f64 / 7.0).collect());
        let y = model.forward(&x, Mode::Train).unwrap();
        assert_eq!(y.shape(), (2, 1, 1920));
        assert!(y.data.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn backward_requires_forward() {
        let mut model = DaeModel::new(DaeArchitecture::standard(), 42);
        let g = Tensor::zeros(1, 1, 1920);
        assert!(matches!(model.backward(&g), Err(NnError::BackwardWithoutForward)));
    }

    #[test]
    fn init_is_seed_deterministic() {
        let a = DaeModel::new(DaeArchitecture::standard(), 9);
        let b = DaeModel::new(DaeArchitecture::standard(), 9);
        assert_eq!(a.to_checkpoint_json(), b.to_checkpoint_json());
        let c = DaeModel::new(DaeArchitecture::standard(), 10);
        assert_ne!(a.to_checkpoint_json(), c.to_checkpoint_json());
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let mut model = DaeModel::new(DaeArchitecture::standard(), 7);
        // Perturb running stats so defaults are not what round-trips.
        if let LayerKind::Bn(bn) = &mut model.layers[2] {
            bn.running_mean[0] = 0.123456789123456789;
            bn.running_var[0] = 2.5e-13;
        }
        let json = model.to_checkpoint_json();
        let restored = DaeModel::from_checkpoint_json(&json).unwrap();
        assert_eq!(json, restored.to_checkpoint_json());

        let x = Tensor::from_data(1, 1, 1920, (0..1920).map(|i| (i as f64 * 0.01).sin().abs()).collect());
        let y1 = model.infer(&x).unwrap();
        let y2 = restored.infer(&x).unwrap();
        assert_eq!(y1.data, y2.data);
    }

    #[test]
    fn rejects_wrong_version() {
        let model = DaeModel::new(DaeArchitecture::standard(), 7);
        let json = model.to_checkpoint_json().replace("\"version\":1", "\"version\":99");
        assert!(matches!(
            DaeModel::from_checkpoint_json(&json),
            Err(NnError::Checkpoint(_))
        ));
    }
}
