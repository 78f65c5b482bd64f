//! Gated articulation estimation.
//!
//! Two regressors predict the articulation cue: one from exteroceptive
//! shape features alone, one additionally from interaction history. A
//! learned scalar gate blends them, alpha_mix = (1 - gamma) * alpha_ext +
//! gamma * alpha_prop, so the policy can lean on interaction evidence
//! exactly when it exists. By default the blend loss trains only the gate;
//! the estimators see it as a stop-gradient.

use crate::nn::{Activation, Adam, Mlp, NnError};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Width of the articulation cue vector.
pub const ALPHA_DIM: usize = 3;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ArtiEstConfig {
    pub ext_hidden: Vec<usize>,
    pub prop_hidden: Vec<usize>,
    pub gate_hidden: Vec<usize>,
    pub lr: f64,
    /// When true, the blend loss also backpropagates into both estimators.
    pub mix_trains_estimators: bool,
}

impl Default for ArtiEstConfig {
    fn default() -> Self {
        Self {
            ext_hidden: vec![128, 64],
            prop_hidden: vec![128, 64],
            gate_hidden: vec![32],
            lr: 5e-4,
            mix_trains_estimators: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArtiEst {
    pub ext: Mlp,
    pub prop: Mlp,
    /// Sigmoid head; input is the history latent plus both estimates.
    pub gate: Mlp,
    pub cfg: ArtiEstConfig,
    latent_dim: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct ArtiEstOutput {
    pub alpha_ext: [f64; ALPHA_DIM],
    pub alpha_prop: [f64; ALPHA_DIM],
    pub gamma: f64,
    pub alpha_mix: [f64; ALPHA_DIM],
}

/// One training sample as stored by the rollout.
#[derive(Debug, Clone)]
pub struct ArtiEstSample {
    pub ext_in: Vec<f64>,
    pub prop_in: Vec<f64>,
    pub latent: Vec<f64>,
    pub target: [f64; ALPHA_DIM],
    /// True while the articulation was held and displaced; gates the
    /// proprioceptive loss.
    pub opening: bool,
}

/// Flat gradient buffers, one per network.
#[derive(Debug, Clone)]
pub struct ArtiEstGrads {
    pub ext: Vec<f64>,
    pub prop: Vec<f64>,
    pub gate: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ArtiEstStats {
    pub ext_loss: f64,
    pub prop_loss: f64,
    pub mix_loss: f64,
    pub mean_gamma: f64,
    pub opening_count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArtiEstOptim {
    pub ext: Adam,
    pub prop: Adam,
    pub gate: Adam,
}

impl ArtiEstOptim {
    pub fn new(est: &ArtiEst) -> Self {
        Self {
            ext: Adam::new(est.ext.params().len(), est.cfg.lr),
            prop: Adam::new(est.prop.params().len(), est.cfg.lr),
            gate: Adam::new(est.gate.params().len(), est.cfg.lr),
        }
    }
}

impl ArtiEst {
    pub fn new<R: Rng>(ext_dim: usize, prop_dim: usize, latent_dim: usize, cfg: ArtiEstConfig, rng: &mut R) -> Self {
        let mut ext_sizes = vec![ext_dim];
        ext_sizes.extend_from_slice(&cfg.ext_hidden);
        ext_sizes.push(ALPHA_DIM);
        let mut prop_sizes = vec![prop_dim];
        prop_sizes.extend_from_slice(&cfg.prop_hidden);
        prop_sizes.push(ALPHA_DIM);
        let mut gate_sizes = vec![latent_dim + 2 * ALPHA_DIM];
        gate_sizes.extend_from_slice(&cfg.gate_hidden);
        gate_sizes.push(1);
        let mut ext = Mlp::new(ext_sizes, Activation::Identity, rng);
        let mut prop = Mlp::new(prop_sizes, Activation::Identity, rng);
        let mut gate = Mlp::new(gate_sizes, Activation::Sigmoid, rng);
        // Estimates start at zero, the gate at exactly 1/2.
        ext.zero_final_layer();
        prop.zero_final_layer();
        gate.zero_final_layer();
        Self { ext, prop, gate, cfg, latent_dim }
    }

    fn gate_input(&self, latent: &[f64], alpha_ext: &[f64], alpha_prop: &[f64]) -> Vec<f64> {
        assert_eq!(latent.len(), self.latent_dim);
        let mut g = Vec::with_capacity(self.latent_dim + 2 * ALPHA_DIM);
        g.extend_from_slice(latent);
        g.extend_from_slice(alpha_ext);
        g.extend_from_slice(alpha_prop);
        g
    }

    pub fn forward(&self, ext_in: &[f64], prop_in: &[f64], latent: &[f64]) -> ArtiEstOutput {
        let e = self.ext.forward(ext_in);
        let p = self.prop.forward(prop_in);
        let g = self.gate.forward(&self.gate_input(latent, &e, &p));
        let gamma = g[0];
        let alpha_ext: [f64; ALPHA_DIM] = std::array::from_fn(|d| e[d]);
        let alpha_prop: [f64; ALPHA_DIM] = std::array::from_fn(|d| p[d]);
        let alpha_mix = mix_alpha(&alpha_ext, &alpha_prop, gamma);
        ArtiEstOutput { alpha_ext, alpha_prop, gamma, alpha_mix }
    }

    pub fn zero_grads(&self) -> ArtiEstGrads {
        ArtiEstGrads {
            ext: vec![0.0; self.ext.params().len()],
            prop: vec![0.0; self.prop.params().len()],
            gate: vec![0.0; self.gate.params().len()],
        }
    }

    /// Gradients and losses over one batch.
    ///
    /// Losses, each a per-dimension mean squared error:
    /// - ext: over every sample;
    /// - prop: over opening samples only, exactly zero gradient otherwise;
    /// - mix: over every sample, flowing into the gate (and, only with
    ///   `mix_trains_estimators`, into the estimators).
    pub fn batch_gradients(&self, samples: &[ArtiEstSample]) -> (ArtiEstGrads, ArtiEstStats) {
        let mut grads = self.zero_grads();
        let mut stats = ArtiEstStats::default();
        if samples.is_empty() {
            return (grads, stats);
        }
        let n = samples.len() as f64;
        let n_open = samples.iter().filter(|s| s.opening).count();
        stats.opening_count = n_open;
        let dim = ALPHA_DIM as f64;

        for s in samples {
            let ext_trace = self.ext.forward_trace(&s.ext_in);
            let prop_trace = self.prop.forward_trace(&s.prop_in);
            let e = ext_trace.output().to_vec();
            let p = prop_trace.output().to_vec();
            let gate_in = self.gate_input(&s.latent, &e, &p);
            let gate_trace = self.gate.forward_trace(&gate_in);
            let gamma = gate_trace.output()[0];

            let e_arr: [f64; ALPHA_DIM] = std::array::from_fn(|d| e[d]);
            let p_arr: [f64; ALPHA_DIM] = std::array::from_fn(|d| p[d]);
            let mix = mix_alpha(&e_arr, &p_arr, gamma);

            let mut ext_grad_out = [0.0; ALPHA_DIM];
            let mut prop_grad_out = [0.0; ALPHA_DIM];
            let mut d_gamma = 0.0;
            for d in 0..ALPHA_DIM {
                let ext_err = e[d] - s.target[d];
                stats.ext_loss += ext_err * ext_err / (dim * n);
                ext_grad_out[d] += 2.0 * ext_err / (dim * n);

                if s.opening {
                    let prop_err = p[d] - s.target[d];
                    stats.prop_loss += prop_err * prop_err / (dim * n_open as f64);
                    prop_grad_out[d] += 2.0 * prop_err / (dim * n_open as f64);
                }

                let mix_err = mix[d] - s.target[d];
                stats.mix_loss += mix_err * mix_err / (dim * n);
                let g_mix = 2.0 * mix_err / (dim * n);
                d_gamma += g_mix * (p[d] - e[d]);
                if self.cfg.mix_trains_estimators {
                    ext_grad_out[d] += g_mix * (1.0 - gamma);
                    prop_grad_out[d] += g_mix * gamma;
                }
            }
            stats.mean_gamma += gamma / n;

            self.ext.backward(&ext_trace, &ext_grad_out, &mut grads.ext, None);
            if s.opening || self.cfg.mix_trains_estimators {
                self.prop.backward(&prop_trace, &prop_grad_out, &mut grads.prop, None);
            }
            self.gate.backward(&gate_trace, &[d_gamma], &mut grads.gate, None);
        }
        (grads, stats)
    }

    pub fn apply(&mut self, grads: &ArtiEstGrads, optim: &mut ArtiEstOptim) -> Result<(), NnError> {
        optim.ext.step(self.ext.params_mut(), &grads.ext)?;
        optim.prop.step(self.prop.params_mut(), &grads.prop)?;
        optim.gate.step(self.gate.params_mut(), &grads.gate)?;
        Ok(())
    }
}

/// Belief-gated mixture: per dimension, (1 - gamma) * ext + gamma * prop.
pub fn mix_alpha(
    alpha_ext: &[f64; ALPHA_DIM],
    alpha_prop: &[f64; ALPHA_DIM],
    gamma: f64,
) -> [f64; ALPHA_DIM] {
    std::array::from_fn(|d| (1.0 - gamma) * alpha_ext[d] + gamma * alpha_prop[d])
}

/// Angle between a predicted and a reference cue, in degrees. A
/// degenerate (near-zero) vector on either side reads as 90, the
/// uninformative midpoint.
pub fn direction_error_deg(pred: &[f64], target: &[f64]) -> f64 {
    let np = pred.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nt = target.iter().map(|x| x * x).sum::<f64>().sqrt();
    if np < 1e-9 || nt < 1e-9 {
        return 90.0;
    }
    let dot: f64 = pred.iter().zip(target).map(|(a, b)| a * b).sum();
    (dot / (np * nt)).clamp(-1.0, 1.0).acos().to_degrees()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample_batch(est: &ArtiEst, n: usize, opening_period: usize, seed: u64) -> Vec<ArtiEstSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| ArtiEstSample {
                ext_in: (0..est.ext.input_dim()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                prop_in: (0..est.prop.input_dim()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                latent: (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                target: [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)],
                opening: opening_period > 0 && i % opening_period == 0,
            })
            .collect()
    }

    fn small_est(mix_trains: bool) -> ArtiEst {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = ArtiEstConfig {
            ext_hidden: vec![16],
            prop_hidden: vec![16],
            gate_hidden: vec![8],
            lr: 1e-3,
            mix_trains_estimators: mix_trains,
        };
        ArtiEst::new(10, 12, 4, cfg, &mut rng)
    }

    #[test]
    fn initial_output_is_neutral() {
        let est = small_est(false);
        let out = est.forward(&vec![0.3; 10], &vec![-0.2; 12], &vec![0.1; 4]);
        assert_eq!(out.alpha_ext, [0.0; 3]);
        assert_eq!(out.alpha_prop, [0.0; 3]);
        assert_eq!(out.gamma, 0.5);
    }

    #[test]
    fn blend_is_exact_convex_combination() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut est = small_est(false);
        // Randomize all weights so outputs are nontrivial.
        for p in est.ext.params_mut() {
            *p = rng.gen_range(-0.5..0.5);
        }
        for p in est.prop.params_mut() {
            *p = rng.gen_range(-0.5..0.5);
        }
        for p in est.gate.params_mut() {
            *p = rng.gen_range(-0.5..0.5);
        }
        for _ in 0..100 {
            let ext_in: Vec<f64> = (0..10).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let prop_in: Vec<f64> = (0..12).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let latent: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let out = est.forward(&ext_in, &prop_in, &latent);
            assert!(out.gamma > 0.0 && out.gamma < 1.0);
            for d in 0..ALPHA_DIM {
                let expect = (1.0 - out.gamma) * out.alpha_ext[d] + out.gamma * out.alpha_prop[d];
                assert_eq!(out.alpha_mix[d], expect);
            }
        }
    }

    #[test]
    fn non_opening_samples_leave_prop_gradient_zero() {
        let mut est = small_est(false);
        // Non-degenerate estimators: with both at exactly zero output, the
        // blend is flat in gamma and the gate correctly gets no gradient.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for p in est.ext.params_mut() {
            *p = rng.gen_range(-0.5..0.5);
        }
        for p in est.prop.params_mut() {
            *p = rng.gen_range(-0.5..0.5);
        }
        let batch = sample_batch(&est, 32, 0, 9); // no sample is opening
        let (grads, stats) = est.batch_gradients(&batch);
        assert_eq!(stats.opening_count, 0);
        assert!(grads.prop.iter().all(|&g| g == 0.0), "prop gradient leaked");
        assert!(grads.ext.iter().any(|&g| g != 0.0), "ext should still train");
        assert!(grads.gate.iter().any(|&g| g != 0.0), "gate should still train");
    }

    #[test]
    fn stop_gradient_isolates_estimators_from_the_gate() {
        // With the default stop-gradient, estimator gradients cannot depend
        // on gate parameters; perturbing the gate must leave them bitwise
        // unchanged. With blending backprop enabled they must differ.
        for mix_trains in [false, true] {
            let mut est = small_est(mix_trains);
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            for p in est.ext.params_mut() {
                *p = rng.gen_range(-0.5..0.5);
            }
            for p in est.prop.params_mut() {
                *p = rng.gen_range(-0.5..0.5);
            }
            for p in est.gate.params_mut() {
                *p = rng.gen_range(-0.5..0.5);
            }
            let batch = sample_batch(&est, 16, 2, 13);
            let (g1, _) = est.batch_gradients(&batch);
            for p in est.gate.params_mut() {
                *p += 0.3;
            }
            let (g2, _) = est.batch_gradients(&batch);
            if mix_trains {
                assert!(
                    g1.ext.iter().zip(&g2.ext).any(|(a, b)| a != b),
                    "blending backprop should couple the gate into ext"
                );
            } else {
                assert_eq!(g1.ext, g2.ext, "stop-gradient violated for ext");
                assert_eq!(g1.prop, g2.prop, "stop-gradient violated for prop");
            }
        }
    }

    #[test]
    fn training_fits_a_constant_target() {
        let mut est = small_est(false);
        let mut optim = ArtiEstOptim::new(&est);
        let target = [0.25, -0.4, 0.1];
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..400 {
            let batch: Vec<ArtiEstSample> = (0..16)
                .map(|_| ArtiEstSample {
                    ext_in: (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                    prop_in: (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                    latent: (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                    target,
                    opening: true,
                })
                .collect();
            let (grads, _) = est.batch_gradients(&batch);
            est.apply(&grads, &mut optim).unwrap();
        }
        let out = est.forward(&vec![0.2; 10], &vec![0.2; 12], &vec![0.2; 4]);
        for d in 0..ALPHA_DIM {
            assert!(
                (out.alpha_mix[d] - target[d]).abs() < 0.05,
                "dim {d}: {} vs {}",
                out.alpha_mix[d],
                target[d]
            );
        }
    }

    #[test]
    fn direction_error_known_angles() {
        assert!((direction_error_deg(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]) - 90.0).abs() < 1e-9);
        assert!((direction_error_deg(&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0])).abs() < 1e-9);
        assert!((direction_error_deg(&[1.0, 0.0, 0.0], &[-1.0, 0.0, 0.0]) - 180.0).abs() < 1e-9);
        assert_eq!(direction_error_deg(&[0.0; 3], &[1.0, 0.0, 0.0]), 90.0);
    }
}
