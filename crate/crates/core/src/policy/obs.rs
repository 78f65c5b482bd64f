//! Observation vectors for the actor, critic, and estimators.
//!
//! Everything is expressed in the robot base frame. The handle position
//! the actor sees is the one captured at episode start (perception is a
//! snapshot), while rewards use the live simulator state.

use crate::geometry::wrap_angle;
use crate::sim::{Env, PROPRIO_DIM};
use serde::{Deserialize, Serialize};
use std::ops::Range;

/// Width of the articulation cue.
pub const ALPHA_DIM: usize = 3;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObsLayout {
    pub latent_dim: usize,
    /// Flattened shape feature width (3 * points).
    pub shape_dim: usize,
    /// When false the actor gets only the captured handle center (3 wide)
    /// instead of the full shape feature.
    pub full_handle_feature: bool,
}

impl ObsLayout {
    pub fn new(latent_dim: usize, shape_dim: usize, full_handle_feature: bool) -> Self {
        Self { latent_dim, shape_dim, full_handle_feature }
    }

    pub fn handle_block_dim(&self) -> usize {
        if self.full_handle_feature {
            self.shape_dim
        } else {
            3
        }
    }

    /// proprio | latent | handle block | alpha | ee-to-handle | heading
    pub fn obs_dim(&self) -> usize {
        PROPRIO_DIM + self.latent_dim + self.handle_block_dim() + ALPHA_DIM + 3 + 1
    }

    pub fn critic_obs_dim(&self, privileged: bool) -> usize {
        self.obs_dim() + usize::from(privileged)
    }

    pub fn handle_block_range(&self) -> Range<usize> {
        let start = PROPRIO_DIM + self.latent_dim;
        start..start + self.handle_block_dim()
    }

    pub fn alpha_range(&self) -> Range<usize> {
        let start = PROPRIO_DIM + self.latent_dim + self.handle_block_dim();
        start..start + ALPHA_DIM
    }

    /// Exteroceptive estimator input: handle shape | panel shape.
    pub fn ext_input_dim(&self) -> usize {
        2 * self.shape_dim
    }

    /// Proprioceptive estimator input: proprio | latent | handle | panel.
    pub fn prop_input_dim(&self) -> usize {
        PROPRIO_DIM + self.latent_dim + 2 * self.shape_dim
    }

    /// Offset of the handle shape block inside the prop estimator input.
    pub fn prop_shape_offset(&self) -> usize {
        PROPRIO_DIM + self.latent_dim
    }
}

pub fn build_ext_input(env: &Env, out: &mut Vec<f64>) {
    out.clear();
    env.handle_feature.express_in(&env.base, out);
    env.panel_feature.express_in(&env.base, out);
}

pub fn build_prop_input(env: &Env, latent: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.extend_from_slice(env.latest_frame());
    out.extend_from_slice(latent);
    env.handle_feature.express_in(&env.base, out);
    env.panel_feature.express_in(&env.base, out);
}

/// Actor observation. `alpha_mix` is whatever the active estimator blend
/// produced for this step, already in base frame.
pub fn build_obs(
    env: &Env,
    latent: &[f64],
    alpha_mix: &[f64; ALPHA_DIM],
    layout: &ObsLayout,
    out: &mut Vec<f64>,
) {
    out.clear();
    out.extend_from_slice(env.latest_frame());
    assert_eq!(latent.len(), layout.latent_dim);
    out.extend_from_slice(latent);
    let captured_local = env.base.inverse_transform_point(&env.captured_handle_center);
    if layout.full_handle_feature {
        env.handle_feature.express_in(&env.base, out);
    } else {
        out.push(captured_local.x);
        out.push(captured_local.y);
        out.push(captured_local.z);
    }
    out.extend_from_slice(alpha_mix);
    let to_handle = captured_local - env.ee_base.position;
    out.push(to_handle.x);
    out.push(to_handle.y);
    out.push(to_handle.z);
    let p = env.base.position;
    let facing = (-p.y).atan2(-p.x);
    out.push(wrap_angle(facing - env.base.yaw()));
    debug_assert_eq!(out.len(), layout.obs_dim());
}

pub fn build_critic_obs(obs: &[f64], xi_norm: f64, privileged: bool, out: &mut Vec<f64>) {
    out.clear();
    out.extend_from_slice(obs);
    if privileged {
        out.push(xi_norm);
    }
}

/// Estimator regression target: the articulation cue in base frame.
pub fn articulation_target(env: &Env) -> [f64; ALPHA_DIM] {
    let cue = env
        .asset
        .articulation_cue_at(env.xi)
        .expect("generated assets keep the handle off the joint axis");
    let local = env.base.inverse_transform_vector(&cue);
    [local.x, local.y, local.z]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::asset::generate_asset;
    use crate::sim::SimConfig;

    fn env() -> Env {
        Env::new(SimConfig::default(), generate_asset(400, 0, 0.0), 5)
    }

    #[test]
    fn layout_ranges_tile_the_vector() {
        for full in [true, false] {
            let layout = ObsLayout::new(16, 24, full);
            let hb = layout.handle_block_range();
            let ar = layout.alpha_range();
            assert_eq!(hb.start, PROPRIO_DIM + 16);
            assert_eq!(ar.start, hb.end);
            assert_eq!(layout.obs_dim(), ar.end + 4);
            assert_eq!(layout.critic_obs_dim(true), layout.obs_dim() + 1);
        }
    }

    #[test]
    fn obs_matches_layout_dims_and_slices() {
        let env = env();
        let layout = ObsLayout::new(4, 24, true);
        let latent = [0.5, -0.5, 0.25, 0.0];
        let alpha = [0.1, 0.2, 0.3];
        let mut obs = Vec::new();
        build_obs(&env, &latent, &alpha, &layout, &mut obs);
        assert_eq!(obs.len(), layout.obs_dim());
        assert_eq!(&obs[layout.alpha_range()], &alpha);
        let mut expect_handle = Vec::new();
        env.handle_feature.express_in(&env.base, &mut expect_handle);
        assert_eq!(&obs[layout.handle_block_range()], expect_handle.as_slice());
    }

    #[test]
    fn estimator_inputs_have_declared_dims() {
        let env = env();
        let layout = ObsLayout::new(16, 24, true);
        let mut ext = Vec::new();
        build_ext_input(&env, &mut ext);
        assert_eq!(ext.len(), layout.ext_input_dim());
        let latent = vec![0.0; 16];
        let mut prop = Vec::new();
        build_prop_input(&env, &latent, &mut prop);
        assert_eq!(prop.len(), layout.prop_input_dim());
        // The handle shape block inside prop matches ext's first block.
        let off = layout.prop_shape_offset();
        assert_eq!(&prop[off..off + 24], &ext[..24]);
    }

    #[test]
    fn target_is_base_frame_cue() {
        let env = env();
        let t = articulation_target(&env);
        let world = env.asset.articulation_cue_at(env.xi).unwrap();
        let back = env.base.transform_vector(&nalgebra::Vector3::new(t[0], t[1], t[2]));
        assert!((back - world).norm() < 1e-12);
    }
}
