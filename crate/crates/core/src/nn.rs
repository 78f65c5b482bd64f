//! Minimal dense networks with manual backprop.
//!
//! Parameters live in one flat `Vec<f64>` per network (per layer: weight
//! matrix row-major, then bias), which keeps optimizers and checkpoints
//! trivial and makes finite-difference checks cheap. Hidden layers use
//! ELU, which is C1, so central differences stay valid everywhere.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("non-finite gradient at parameter index {index}")]
    NonFiniteGradient { index: usize },
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
}

/// Output-layer activation. Hidden layers are always ELU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Identity,
    Sigmoid,
}

fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp() - 1.0
    }
}

/// ELU derivative from the activation value: a + 1 = e^x on the negative side.
fn elu_grad_from_act(a: f64) -> f64 {
    if a > 0.0 {
        1.0
    } else {
        a + 1.0
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Fully connected network; `sizes` = [input, hidden.., output].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    output_activation: Activation,
    params: Vec<f64>,
}

/// Activations recorded during a forward pass, consumed by `backward`.
#[derive(Debug, Clone)]
pub struct Trace {
    /// acts[0] is the input, acts[L] the network output.
    acts: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("trace always holds the input layer")
    }
}

impl Mlp {
    pub fn param_count(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    /// LeCun-normal weights, zero biases.
    pub fn new<R: Rng>(sizes: Vec<usize>, output_activation: Activation, rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output sizes");
        let mut params = Vec::with_capacity(Self::param_count(&sizes));
        for w in sizes.windows(2) {
            let (n_in, n_out) = (w[0], w[1]);
            let dist = Normal::new(0.0, (1.0 / n_in as f64).sqrt()).unwrap();
            for _ in 0..n_in * n_out {
                params.push(dist.sample(rng));
            }
            params.extend(std::iter::repeat(0.0).take(n_out));
        }
        Self { sizes, output_activation, params }
    }

    /// Zero the last layer so the initial output is exactly 0 (or 0.5 for
    /// a sigmoid head) regardless of input.
    pub fn zero_final_layer(&mut self) {
        let n = self.sizes.len();
        let last = self.sizes[n - 2] * self.sizes[n - 1] + self.sizes[n - 1];
        let start = self.params.len() - last;
        for p in &mut self.params[start..] {
            *p = 0.0;
        }
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        self.forward_trace(input).acts.pop().unwrap()
    }

    pub fn forward_trace(&self, input: &[f64]) -> Trace {
        assert_eq!(input.len(), self.sizes[0], "input width mismatch");
        let n_layers = self.sizes.len() - 1;
        let mut acts = Vec::with_capacity(n_layers + 1);
        acts.push(input.to_vec());
        let mut offset = 0;
        for (l, w) in self.sizes.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            let weights = &self.params[offset..offset + n_in * n_out];
            let biases = &self.params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            offset += n_in * n_out + n_out;
            let prev = &acts[l];
            let mut next = vec![0.0; n_out];
            for o in 0..n_out {
                let row = &weights[o * n_in..(o + 1) * n_in];
                let mut z = biases[o];
                for i in 0..n_in {
                    z += row[i] * prev[i];
                }
                next[o] = if l + 1 == n_layers {
                    match self.output_activation {
                        Activation::Identity => z,
                        Activation::Sigmoid => sigmoid(z),
                    }
                } else {
                    elu(z)
                };
            }
            acts.push(next);
        }
        Trace { acts }
    }

    /// Backprop `grad_output` (dL/d output) through the trace. Parameter
    /// gradients accumulate into `grad_params`; if `grad_input` is given,
    /// dL/d input accumulates there too.
    pub fn backward(
        &self,
        trace: &Trace,
        grad_output: &[f64],
        grad_params: &mut [f64],
        mut grad_input: Option<&mut [f64]>,
    ) {
        assert_eq!(grad_params.len(), self.params.len(), "gradient buffer mismatch");
        let n_layers = self.sizes.len() - 1;
        assert_eq!(grad_output.len(), self.output_dim());

        // delta starts as dL/dz of the output layer.
        let out_acts = trace.output();
        let mut delta: Vec<f64> = grad_output
            .iter()
            .zip(out_acts)
            .map(|(&g, &a)| match self.output_activation {
                Activation::Identity => g,
                Activation::Sigmoid => g * a * (1.0 - a),
            })
            .collect();

        // Walk layers back to front; offsets recomputed per layer.
        let mut offsets = Vec::with_capacity(n_layers);
        let mut off = 0;
        for w in self.sizes.windows(2) {
            offsets.push(off);
            off += w[0] * w[1] + w[1];
        }

        for l in (0..n_layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let offset = offsets[l];
            let prev = &trace.acts[l];
            {
                let gw = &mut grad_params[offset..offset + n_in * n_out];
                for o in 0..n_out {
                    let d = delta[o];
                    let row = &mut gw[o * n_in..(o + 1) * n_in];
                    for i in 0..n_in {
                        row[i] += d * prev[i];
                    }
                }
            }
            {
                let gb = &mut grad_params[offset + n_in * n_out..offset + n_in * n_out + n_out];
                for o in 0..n_out {
                    gb[o] += delta[o];
                }
            }
            if l == 0 {
                if let Some(gi) = grad_input.as_deref_mut() {
                    let weights = &self.params[offset..offset + n_in * n_out];
                    for i in 0..n_in {
                        let mut s = 0.0;
                        for o in 0..n_out {
                            s += weights[o * n_in + i] * delta[o];
                        }
                        gi[i] += s;
                    }
                }
            } else {
                let weights = &self.params[offset..offset + n_in * n_out];
                let mut next_delta = vec![0.0; n_in];
                for i in 0..n_in {
                    let mut s = 0.0;
                    for o in 0..n_out {
                        s += weights[o * n_in + i] * delta[o];
                    }
                    next_delta[i] = s * elu_grad_from_act(trace.acts[l][i]);
                }
                delta = next_delta;
            }
        }
    }
}

/// Adam with bias correction. State is serialized with checkpoints so a
/// resumed run continues bit-identically.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(param_len: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; param_len],
            v: vec![0.0; param_len],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<(), NnError> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(NnError::ShapeMismatch { expected: self.m.len(), got: grads.len() });
        }
        for (index, &g) in grads.iter().enumerate() {
            if !g.is_finite() {
                return Err(NnError::NonFiniteGradient { index });
            }
        }
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grads[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grads[i] * grads[i];
            let m_hat = self.m[i] / b1t;
            let v_hat = self.v[i] / b2t;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

/// Variational encoder over a proprioception history window.
///
/// The encoder maps the flattened window to (mu, log-variance); the decoder
/// reconstructs the most recent frame from a sampled latent. Only the VAE
/// objective trains these weights; consumers read `mu` as a plain feature.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HistoryVae {
    pub encoder: Mlp,
    pub decoder: Mlp,
    pub latent_dim: usize,
    pub beta: f64,
}

/// Per-sample VAE forward pass artifacts needed for the backward pass.
pub struct VaeTrace {
    pub enc: Trace,
    pub dec: Trace,
    pub mu: Vec<f64>,
    pub logvar: Vec<f64>,
    /// Clamp mask: 1.0 where logvar passed through unclamped.
    logvar_gate: Vec<f64>,
    pub z: Vec<f64>,
    pub eps: Vec<f64>,
}

const LOGVAR_MIN: f64 = -10.0;
const LOGVAR_MAX: f64 = 10.0;

impl HistoryVae {
    pub fn new<R: Rng>(
        input_dim: usize,
        frame_dim: usize,
        latent_dim: usize,
        enc_hidden: &[usize],
        dec_hidden: &[usize],
        beta: f64,
        rng: &mut R,
    ) -> Self {
        let mut enc_sizes = vec![input_dim];
        enc_sizes.extend_from_slice(enc_hidden);
        enc_sizes.push(2 * latent_dim);
        let mut dec_sizes = vec![latent_dim];
        dec_sizes.extend_from_slice(dec_hidden);
        dec_sizes.push(frame_dim);
        Self {
            encoder: Mlp::new(enc_sizes, Activation::Identity, rng),
            decoder: Mlp::new(dec_sizes, Activation::Identity, rng),
            latent_dim,
            beta,
        }
    }

    /// Deterministic feature for policy consumption: the posterior mean.
    pub fn encode_mean(&self, window: &[f64]) -> Vec<f64> {
        let out = self.encoder.forward(window);
        out[..self.latent_dim].to_vec()
    }

    pub fn forward_sample<R: Rng>(&self, window: &[f64], rng: &mut R) -> VaeTrace {
        let enc = self.encoder.forward_trace(window);
        let raw = enc.output();
        let mut mu = vec![0.0; self.latent_dim];
        let mut logvar = vec![0.0; self.latent_dim];
        let mut gate = vec![0.0; self.latent_dim];
        for j in 0..self.latent_dim {
            mu[j] = raw[j];
            let lv = raw[self.latent_dim + j];
            logvar[j] = lv.clamp(LOGVAR_MIN, LOGVAR_MAX);
            gate[j] = if (LOGVAR_MIN..=LOGVAR_MAX).contains(&lv) { 1.0 } else { 0.0 };
        }
        let normal = Normal::new(0.0, 1.0).unwrap();
        let eps: Vec<f64> = (0..self.latent_dim).map(|_| normal.sample(rng)).collect();
        let z: Vec<f64> = (0..self.latent_dim)
            .map(|j| mu[j] + (0.5 * logvar[j]).exp() * eps[j])
            .collect();
        let dec = self.decoder.forward_trace(&z);
        VaeTrace { enc, dec, mu, logvar, logvar_gate: gate, z, eps }
    }

    /// Loss for one sample: mean squared reconstruction error of the target
    /// frame plus beta times the Gaussian KL to the standard normal,
    /// KL = 1/2 sum(mu^2 + sigma^2 - 1 - logvar).
    pub fn loss(&self, trace: &VaeTrace, target_frame: &[f64]) -> (f64, f64) {
        let recon = trace.dec.output();
        assert_eq!(recon.len(), target_frame.len());
        let n = recon.len() as f64;
        let mse = recon
            .iter()
            .zip(target_frame)
            .map(|(&r, &t)| (r - t) * (r - t))
            .sum::<f64>()
            / n;
        let kl = 0.5
            * trace
                .mu
                .iter()
                .zip(&trace.logvar)
                .map(|(&m, &lv)| m * m + lv.exp() - 1.0 - lv)
                .sum::<f64>();
        (mse, kl)
    }

    /// Accumulate gradients of `scale * (mse + beta * kl)` for one sample.
    pub fn backward(
        &self,
        trace: &VaeTrace,
        target_frame: &[f64],
        scale: f64,
        grad_enc: &mut [f64],
        grad_dec: &mut [f64],
    ) {
        let recon = trace.dec.output();
        let n = recon.len() as f64;
        let grad_recon: Vec<f64> = recon
            .iter()
            .zip(target_frame)
            .map(|(&r, &t)| scale * 2.0 * (r - t) / n)
            .collect();
        let mut grad_z = vec![0.0; self.latent_dim];
        self.decoder.backward(&trace.dec, &grad_recon, grad_dec, Some(&mut grad_z));

        // z = mu + exp(logvar/2) * eps, KL as in `loss`.
        let mut grad_enc_out = vec![0.0; 2 * self.latent_dim];
        for j in 0..self.latent_dim {
            let sigma = (0.5 * trace.logvar[j]).exp();
            let d_mu = grad_z[j] + scale * self.beta * trace.mu[j];
            let d_logvar = grad_z[j] * 0.5 * sigma * trace.eps[j]
                + scale * self.beta * 0.5 * (trace.logvar[j].exp() - 1.0);
            grad_enc_out[j] = d_mu;
            grad_enc_out[self.latent_dim + j] = d_logvar * trace.logvar_gate[j];
        }
        self.encoder.backward(&trace.enc, &grad_enc_out, grad_enc, None);
    }
}
