//! Input attribution for shape points.
//!
//! For each captured shape point, sum |d action_k / d coordinate| over all
//! action dimensions and coordinates, through every path a point reaches
//! the actor: the direct handle block in the observation, and both
//! estimators feeding the blended articulation cue (whose gate also sees
//! both estimates).

use crate::artiest::{ArtiEst, ALPHA_DIM};
use crate::nn::Mlp;
use crate::policy::obs::ObsLayout;
use crate::safe::SHAPE_POINTS;

/// Per-point saliency masses for one step.
#[derive(Debug, Clone, Copy, Default)]
pub struct PointSaliency {
    pub handle: [f64; SHAPE_POINTS],
    pub panel: [f64; SHAPE_POINTS],
}

impl PointSaliency {
    pub fn add(&mut self, other: &PointSaliency) {
        for i in 0..SHAPE_POINTS {
            self.handle[i] += other.handle[i];
            self.panel[i] += other.panel[i];
        }
    }

    pub fn scale(&mut self, s: f64) {
        for i in 0..SHAPE_POINTS {
            self.handle[i] *= s;
            self.panel[i] *= s;
        }
    }
}

/// Everything one saliency evaluation needs; all inputs must describe the
/// same instant.
pub struct SaliencyStep<'a> {
    pub est: &'a ArtiEst,
    pub actor: &'a Mlp,
    pub layout: &'a ObsLayout,
    pub ext_in: &'a [f64],
    pub prop_in: &'a [f64],
    pub latent: &'a [f64],
    pub obs: &'a [f64],
}

/// Signed gradient of one actor output w.r.t. every shape coordinate.
/// Exposed so oracles can check the chain before the absolute values and
/// point sums collapse it.
pub fn action_coordinate_gradients(step: &SaliencyStep, action_dim: usize) -> (Vec<f64>, Vec<f64>) {
    let shape_dim = step.layout.shape_dim;
    let ext_trace = step.est.ext.forward_trace(step.ext_in);
    let prop_trace = step.est.prop.forward_trace(step.prop_in);
    let e = ext_trace.output().to_vec();
    let p = prop_trace.output().to_vec();
    let mut gate_in = Vec::with_capacity(step.latent.len() + 2 * ALPHA_DIM);
    gate_in.extend_from_slice(step.latent);
    gate_in.extend_from_slice(&e);
    gate_in.extend_from_slice(&p);
    let gate_trace = step.est.gate.forward_trace(&gate_in);
    let gamma = gate_trace.output()[0];

    let actor_trace = step.actor.forward_trace(step.obs);
    let mut one_hot = vec![0.0; step.actor.output_dim()];
    one_hot[action_dim] = 1.0;
    let mut actor_param_sink = vec![0.0; step.actor.params().len()];
    let mut grad_obs = vec![0.0; step.obs.len()];
    step.actor.backward(&actor_trace, &one_hot, &mut actor_param_sink, Some(&mut grad_obs));

    // Direct path: the handle block of the observation.
    let mut grad_handle = vec![0.0; shape_dim];
    let mut grad_panel = vec![0.0; shape_dim];
    if step.layout.full_handle_feature {
        let hb = step.layout.handle_block_range();
        grad_handle.copy_from_slice(&grad_obs[hb]);
    }

    // Estimator path: obs alpha block back through the blend.
    let ar = step.layout.alpha_range();
    let grad_alpha = &grad_obs[ar];
    let mut d_gamma = 0.0;
    let mut grad_e = [0.0; ALPHA_DIM];
    let mut grad_p = [0.0; ALPHA_DIM];
    for d in 0..ALPHA_DIM {
        grad_e[d] = grad_alpha[d] * (1.0 - gamma);
        grad_p[d] = grad_alpha[d] * gamma;
        d_gamma += grad_alpha[d] * (p[d] - e[d]);
    }
    // The gate reads both estimates, so gamma couples back into them.
    let mut gate_param_sink = vec![0.0; step.est.gate.params().len()];
    let mut grad_gate_in = vec![0.0; gate_in.len()];
    step.est.gate.backward(&gate_trace, &[d_gamma], &mut gate_param_sink, Some(&mut grad_gate_in));
    let l = step.latent.len();
    for d in 0..ALPHA_DIM {
        grad_e[d] += grad_gate_in[l + d];
        grad_p[d] += grad_gate_in[l + ALPHA_DIM + d];
    }

    let mut ext_param_sink = vec![0.0; step.est.ext.params().len()];
    let mut grad_ext_in = vec![0.0; step.ext_in.len()];
    step.est.ext.backward(&ext_trace, &grad_e, &mut ext_param_sink, Some(&mut grad_ext_in));
    for i in 0..shape_dim {
        grad_handle[i] += grad_ext_in[i];
        grad_panel[i] += grad_ext_in[shape_dim + i];
    }

    let mut prop_param_sink = vec![0.0; step.est.prop.params().len()];
    let mut grad_prop_in = vec![0.0; step.prop_in.len()];
    step.est.prop.backward(&prop_trace, &grad_p, &mut prop_param_sink, Some(&mut grad_prop_in));
    let off = step.layout.prop_shape_offset();
    for i in 0..shape_dim {
        grad_handle[i] += grad_prop_in[off + i];
        grad_panel[i] += grad_prop_in[off + shape_dim + i];
    }

    (grad_handle, grad_panel)
}

/// Saliency of one step: per point, sum of |gradient| over every action
/// dimension and every coordinate.
pub fn step_point_saliency(step: &SaliencyStep) -> PointSaliency {
    let mut out = PointSaliency::default();
    for k in 0..step.actor.output_dim() {
        let (gh, gp) = action_coordinate_gradients(step, k);
        for point in 0..SHAPE_POINTS {
            for c in 0..3 {
                out.handle[point] += gh[3 * point + c].abs();
                out.panel[point] += gp[3 * point + c].abs();
            }
        }
    }
    out
}
