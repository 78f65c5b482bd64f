//! Shaped reward for the opening task.
//!
//! Eight additive terms. The action-penalty terms scale with an exponential
//! moving average of episode success, so regularization phases in only once
//! the task itself is learned. Inputs are plain values, deliberately free
//! of any simulator coupling.

use crate::sim::{ACTION_DIM, EE_CMD_DIM};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    pub w_opening: f64,
    pub w_approach: f64,
    pub w_alignment: f64,
    pub w_grasp: f64,
    /// Shared scale on the three action-penalty terms, negative.
    pub w_penalty: f64,
    pub cmd_rate_scale: f64,
    pub ee_cmd_rate_scale: f64,
    pub smooth_scale: f64,
    pub w_collision: f64,
    /// Gaussian sharpness of the approach term.
    pub approach_sharpness: f64,
    /// Above this opening fraction the approach term saturates at 1.
    pub approach_gate: f64,
    /// EMA rate for the success average that gates the penalties.
    pub success_ema_rate: f64,
    /// The EE-rate difference against a 6-wide previous EE sub-command is
    /// the default; `true` instead pads the EE command with zeros to full
    /// width and subtracts the whole previous command.
    pub ee_rate_literal_padded: bool,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            w_opening: 6.5,
            w_approach: 1.9,
            w_alignment: 0.75,
            w_grasp: 1.0,
            w_penalty: -0.1,
            cmd_rate_scale: 60.0,
            ee_cmd_rate_scale: 30.0,
            smooth_scale: 30.0,
            w_collision: -1.0,
            approach_sharpness: 4.0,
            approach_gate: 0.2,
            // Per-episode EMA step. Deliberately slow: the action penalties
            // scale with this average, and a fast ramp switches them on
            // before the policy's exploration noise has narrowed, burying
            // the task reward under jitter penalties.
            success_ema_rate: 0.002,
            ee_rate_literal_padded: false,
        }
    }
}

/// Everything one reward evaluation reads. Command history slots hold
/// zeros at episode start.
#[derive(Debug, Clone)]
pub struct RewardInput {
    pub xi_norm: f64,
    pub ee_pos: Vector3<f64>,
    pub handle_pos: Vector3<f64>,
    /// Finger-span vs handle long-axis angle, radians.
    pub align_angle: f64,
    pub grasped: bool,
    pub collision: bool,
    pub cmd: [f64; ACTION_DIM],
    pub prev_cmd: [f64; ACTION_DIM],
    pub prev_prev_cmd: [f64; ACTION_DIM],
    /// Success EMA; gates the action penalties.
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardTerms {
    pub opening: f64,
    pub approach: f64,
    pub alignment: f64,
    pub grasping: f64,
    pub cmd_rate: f64,
    pub ee_cmd_rate: f64,
    pub cmd_smooth: f64,
    pub collision: f64,
}

impl RewardTerms {
    pub const NAMES: [&'static str; 8] = [
        "opening",
        "approach",
        "alignment",
        "grasping",
        "cmd_rate",
        "ee_cmd_rate",
        "cmd_smooth",
        "collision",
    ];

    pub fn as_array(&self) -> [f64; 8] {
        [
            self.opening,
            self.approach,
            self.alignment,
            self.grasping,
            self.cmd_rate,
            self.ee_cmd_rate,
            self.cmd_smooth,
            self.collision,
        ]
    }

    pub fn total(&self) -> f64 {
        self.as_array().iter().sum()
    }
}

pub fn compute_reward(input: &RewardInput, cfg: &RewardConfig) -> RewardTerms {
    let opening = cfg.w_opening * input.xi_norm;

    let approach_shape = if input.xi_norm < cfg.approach_gate {
        let d2 = (input.ee_pos - input.handle_pos).norm_squared();
        (-cfg.approach_sharpness * d2).exp()
    } else {
        1.0
    };
    let approach = cfg.w_approach * approach_shape;

    let c = input.align_angle.cos();
    let alignment = cfg.w_alignment * c * c;

    let grasping = cfg.w_grasp * if input.grasped { 1.0 } else { 0.0 };

    let mut d_cmd = 0.0;
    for i in 0..ACTION_DIM {
        let d = input.cmd[i] - input.prev_cmd[i];
        d_cmd += d * d;
    }
    let cmd_rate = cfg.w_penalty * cfg.cmd_rate_scale * input.lambda * d_cmd;

    let mut d_ee = 0.0;
    if cfg.ee_rate_literal_padded {
        // Zero-padded EE command minus the full previous command.
        for i in 0..ACTION_DIM {
            let ee = if i < EE_CMD_DIM { input.cmd[i] } else { 0.0 };
            let d = ee - input.prev_cmd[i];
            d_ee += d * d;
        }
    } else {
        for i in 0..EE_CMD_DIM {
            let d = input.cmd[i] - input.prev_cmd[i];
            d_ee += d * d;
        }
    }
    let ee_cmd_rate = cfg.w_penalty * cfg.ee_cmd_rate_scale * input.lambda * d_ee;

    let mut d2_cmd = 0.0;
    for i in 0..ACTION_DIM {
        let d = input.cmd[i] - 2.0 * input.prev_cmd[i] + input.prev_prev_cmd[i];
        d2_cmd += d * d;
    }
    let cmd_smooth = cfg.w_penalty * cfg.smooth_scale * input.lambda * d2_cmd;

    let collision = cfg.w_collision * if input.collision { 1.0 } else { 0.0 };

    RewardTerms {
        opening,
        approach,
        alignment,
        grasping,
        cmd_rate,
        ee_cmd_rate,
        cmd_smooth,
        collision,
    }
}

/// Success EMA update at the end of an episode.
pub fn update_success_ema(lambda: f64, success: bool, rate: f64) -> f64 {
    (1.0 - rate) * lambda + rate * if success { 1.0 } else { 0.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn base_input() -> RewardInput {
        RewardInput {
            xi_norm: 0.0,
            ee_pos: Vector3::new(1.0, 0.0, 0.6),
            handle_pos: Vector3::new(0.1, 0.0, 0.6),
            align_angle: 0.4,
            grasped: false,
            collision: false,
            cmd: [0.0; ACTION_DIM],
            prev_cmd: [0.0; ACTION_DIM],
            prev_prev_cmd: [0.0; ACTION_DIM],
            lambda: 0.0,
        }
    }

    #[test]
    fn approach_saturates_at_the_gate() {
        let cfg = RewardConfig::default();
        let mut input = base_input();
        input.xi_norm = 0.19;
        let below = compute_reward(&input, &cfg);
        input.xi_norm = 0.2;
        let at = compute_reward(&input, &cfg);
        let d2 = (input.ee_pos - input.handle_pos).norm_squared();
        assert_relative_eq!(below.approach, 1.9 * (-4.0 * d2).exp(), epsilon = 1e-12);
        assert_relative_eq!(at.approach, 1.9, epsilon = 1e-12);
    }

    #[test]
    fn penalties_vanish_without_success_history() {
        let cfg = RewardConfig::default();
        let mut input = base_input();
        input.cmd = [0.5; ACTION_DIM];
        input.prev_cmd = [-0.5; ACTION_DIM];
        input.lambda = 0.0;
        let terms = compute_reward(&input, &cfg);
        assert_eq!(terms.cmd_rate, 0.0);
        assert_eq!(terms.ee_cmd_rate, 0.0);
        assert_eq!(terms.cmd_smooth, 0.0);
        input.lambda = 1.0;
        let gated = compute_reward(&input, &cfg);
        assert!(gated.cmd_rate < 0.0 && gated.ee_cmd_rate < 0.0);
    }

    #[test]
    fn hand_computed_spot_value() {
        let cfg = RewardConfig::default();
        let mut input = base_input();
        input.xi_norm = 0.5;
        input.grasped = true;
        input.collision = true;
        input.align_angle = std::f64::consts::FRAC_PI_3;
        input.lambda = 0.5;
        input.cmd[0] = 1.0;
        // opening 6.5*0.5, approach saturated 1.9, alignment 0.75*0.25,
        // grasp 1, collision -1.
        // cmd_rate -0.1*60*0.5*1, ee rate -0.1*30*0.5*1, smooth -0.1*30*0.5*1.
        let terms = compute_reward(&input, &cfg);
        assert_relative_eq!(terms.opening, 3.25, epsilon = 1e-12);
        assert_relative_eq!(terms.approach, 1.9, epsilon = 1e-12);
        assert_relative_eq!(terms.alignment, 0.1875, epsilon = 1e-12);
        assert_relative_eq!(terms.grasping, 1.0, epsilon = 1e-12);
        assert_relative_eq!(terms.cmd_rate, -3.0, epsilon = 1e-12);
        assert_relative_eq!(terms.ee_cmd_rate, -1.5, epsilon = 1e-12);
        assert_relative_eq!(terms.cmd_smooth, -1.5, epsilon = 1e-12);
        assert_relative_eq!(terms.collision, -1.0, epsilon = 1e-12);
        assert_relative_eq!(terms.total(), 3.25 + 1.9 + 0.1875 + 1.0 - 3.0 - 1.5 - 1.5 - 1.0);
    }

    #[test]
    fn literal_padded_variant_differs_only_in_ee_rate() {
        let mut cfg = RewardConfig::default();
        let mut input = base_input();
        input.lambda = 1.0;
        input.cmd = [0.3; ACTION_DIM];
        input.prev_cmd = [0.1; ACTION_DIM];
        let default_terms = compute_reward(&input, &cfg);
        cfg.ee_rate_literal_padded = true;
        let padded_terms = compute_reward(&input, &cfg);
        assert_eq!(default_terms.cmd_rate, padded_terms.cmd_rate);
        assert_eq!(default_terms.cmd_smooth, padded_terms.cmd_smooth);
        // Padded form also pays for the non-EE channels of the previous command.
        let extra: f64 = (EE_CMD_DIM..ACTION_DIM).map(|_| (0.0 - 0.1f64).powi(2)).sum();
        let base: f64 = (0..EE_CMD_DIM).map(|_| (0.3 - 0.1f64).powi(2)).sum();
        assert_relative_eq!(padded_terms.ee_cmd_rate, -0.1 * 30.0 * (base + extra), epsilon = 1e-12);
        assert_relative_eq!(default_terms.ee_cmd_rate, -0.1 * 30.0 * base, epsilon = 1e-12);
    }

    #[test]
    fn ema_converges_to_constant_rate() {
        let mut lambda = 0.0;
        for _ in 0..3000 {
            lambda = update_success_ema(lambda, true, 0.01);
        }
        assert_relative_eq!(lambda, 1.0, epsilon = 1e-9);
        for _ in 0..3000 {
            lambda = update_success_ema(lambda, false, 0.01);
        }
        assert_relative_eq!(lambda, 0.0, epsilon = 1e-9);
    }
}
