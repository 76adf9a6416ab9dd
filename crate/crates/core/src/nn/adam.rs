//! Adam optimizer with bias correction.

#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Per-parameter-group moment accumulators. `t` increments once per
/// [`AdamState::begin_step`]; bias correction uses the incremented value.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub cfg: AdamConfig,
    pub t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(cfg: AdamConfig, group_sizes: &[usize]) -> Self {
        Self {
            cfg,
            t: 0,
            m: group_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: group_sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    /// Starts a new optimizer step; call once, then `update_group` for every
    /// parameter group in registration order.
    pub fn begin_step(&mut self) {
        self.t += 1;
    }

    pub fn update_group(&mut self, group: usize, params: &mut [f64], grads: &[f64]) {
        let cfg = self.cfg;
        let m = &mut self.m[group];
        let v = &mut self.v[group];
        debug_assert_eq!(params.len(), m.len());
        debug_assert_eq!(params.len(), grads.len());
        let bc1 = 1.0 - cfg.beta1.powi(self.t as i32);
        let bc2 = 1.0 - cfg.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            params[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
}
