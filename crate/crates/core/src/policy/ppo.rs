//! Clipped-surrogate policy optimization with GAE.
//!
//! Diagonal Gaussian actor with a state-independent log-std vector, a
//! separate critic, and Adam on each. The shared learning rate adapts
//! after every epoch from the exact Gaussian KL between the collection
//! policy and the current one.

use crate::nn::{Activation, Adam, Mlp, NnError};
use crate::sim::ACTION_DIM;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

const LOG_STD_MIN: f64 = -4.0;
const LOG_STD_MAX: f64 = 1.0;
const HALF_LOG_TAU: f64 = 0.918938533204672742; // 0.5 * ln(2 * pi)

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoConfig {
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    pub init_action_std: f64,
    pub clip: f64,
    pub discount: f64,
    pub gae_lambda: f64,
    pub epochs: usize,
    pub minibatches: usize,
    pub lr_init: f64,
    pub lr_min: f64,
    pub lr_max: f64,
    pub kl_target: f64,
    pub entropy_coef: f64,
    /// Critic additionally sees the true opening fraction.
    pub critic_privileged: bool,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            actor_hidden: vec![128, 64],
            critic_hidden: vec![128, 64],
            init_action_std: 0.6,
            clip: 0.2,
            // Every subgoal is densely shaped, so credit never travels far;
            // a short effective horizon keeps the return scale small enough
            // for the critic to track through the success transition.
            discount: 0.97,
            gae_lambda: 0.95,
            epochs: 4,
            minibatches: 4,
            lr_init: 3e-4,
            lr_min: 1e-6,
            lr_max: 1e-2,
            kl_target: 0.01,
            entropy_coef: 0.0,
            critic_privileged: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActorCritic {
    pub actor: Mlp,
    pub log_std: Vec<f64>,
    pub critic: Mlp,
}

impl ActorCritic {
    pub fn new<R: Rng>(obs_dim: usize, critic_obs_dim: usize, cfg: &PpoConfig, rng: &mut R) -> Self {
        let mut actor_sizes = vec![obs_dim];
        actor_sizes.extend_from_slice(&cfg.actor_hidden);
        actor_sizes.push(ACTION_DIM);
        let mut critic_sizes = vec![critic_obs_dim];
        critic_sizes.extend_from_slice(&cfg.critic_hidden);
        critic_sizes.push(1);
        let mut actor = Mlp::new(actor_sizes, Activation::Identity, rng);
        // The mean starts at zero so early commands sit mid-range.
        actor.zero_final_layer();
        let critic = Mlp::new(critic_sizes, Activation::Identity, rng);
        Self { actor, log_std: vec![cfg.init_action_std.ln(); ACTION_DIM], critic }
    }

    pub fn mean_action(&self, obs: &[f64]) -> [f64; ACTION_DIM] {
        let out = self.actor.forward(obs);
        let mut a = [0.0; ACTION_DIM];
        a.copy_from_slice(&out);
        a
    }

    pub fn sample_action<R: Rng>(&self, obs: &[f64], rng: &mut R) -> SampledAction {
        let mean = self.mean_action(obs);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut action = [0.0; ACTION_DIM];
        let mut std = [0.0; ACTION_DIM];
        for i in 0..ACTION_DIM {
            std[i] = self.log_std[i].exp();
            action[i] = mean[i] + std[i] * normal.sample(rng);
        }
        let logp = log_prob(&mean, &self.log_std, &action);
        SampledAction { action, mean, std, logp }
    }

    pub fn value(&self, critic_obs: &[f64]) -> f64 {
        self.critic.forward(critic_obs)[0]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SampledAction {
    pub action: [f64; ACTION_DIM],
    pub mean: [f64; ACTION_DIM],
    pub std: [f64; ACTION_DIM],
    pub logp: f64,
}

pub fn log_prob(mean: &[f64; ACTION_DIM], log_std: &[f64], action: &[f64; ACTION_DIM]) -> f64 {
    let mut lp = 0.0;
    for i in 0..ACTION_DIM {
        let std = log_std[i].exp();
        let z = (action[i] - mean[i]) / std;
        lp += -0.5 * z * z - log_std[i] - HALF_LOG_TAU;
    }
    lp
}

/// KL(old || new) between diagonal Gaussians, closed form.
pub fn gaussian_kl(
    old_mean: &[f64; ACTION_DIM],
    old_std: &[f64; ACTION_DIM],
    new_mean: &[f64; ACTION_DIM],
    new_std: &[f64; ACTION_DIM],
) -> f64 {
    let mut kl = 0.0;
    for i in 0..ACTION_DIM {
        let vo = old_std[i] * old_std[i];
        let vn = new_std[i] * new_std[i];
        let dm = new_mean[i] - old_mean[i];
        kl += (new_std[i] / old_std[i]).ln() + (vo + dm * dm) / (2.0 * vn) - 0.5;
    }
    kl
}

/// One environment transition as the update consumes it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub critic_obs: Vec<f64>,
    pub action: [f64; ACTION_DIM],
    pub mean: [f64; ACTION_DIM],
    pub std: [f64; ACTION_DIM],
    pub logp: f64,
    pub value: f64,
    pub reward: f64,
    pub done: bool,
    /// Value of the successor state when `done` cuts the lane. Zero for a
    /// true terminal; the critic's estimate of the pre-reset state for a
    /// time-limit truncation, so the agent never learns that the world
    /// ends at the training horizon.
    pub final_value: f64,
}

/// Fixed-layout rollout storage: `per_env[e][t]`, all lanes equally long.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RolloutBuffer {
    pub per_env: Vec<Vec<Transition>>,
    /// Value of the state after the last stored step, per env.
    pub bootstrap: Vec<f64>,
}

impl RolloutBuffer {
    pub fn new(n_envs: usize) -> Self {
        Self { per_env: vec![Vec::new(); n_envs], bootstrap: vec![0.0; n_envs] }
    }

    pub fn clear(&mut self) {
        for lane in &mut self.per_env {
            lane.clear();
        }
    }

    pub fn len(&self) -> usize {
        self.per_env.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Generalized advantage estimates and returns, flattened env-major in
    /// the same order as `flat_indices`.
    pub fn gae(&self, discount: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
        let mut advantages = Vec::with_capacity(self.len());
        let mut returns = Vec::with_capacity(self.len());
        for (e, lane) in self.per_env.iter().enumerate() {
            let t_len = lane.len();
            let mut adv = vec![0.0; t_len];
            let mut acc = 0.0;
            for t in (0..t_len).rev() {
                // Advantage credit never crosses an episode cut, but the
                // value target still bootstraps through a truncation via
                // the stored successor value.
                let (next_value, chain) = if lane[t].done {
                    (lane[t].final_value, 0.0)
                } else if t + 1 < t_len {
                    (lane[t + 1].value, 1.0)
                } else {
                    (self.bootstrap[e], 1.0)
                };
                let delta = lane[t].reward + discount * next_value - lane[t].value;
                acc = delta + discount * lambda * chain * acc;
                adv[t] = acc;
            }
            for t in 0..t_len {
                advantages.push(adv[t]);
                returns.push(adv[t] + lane[t].value);
            }
        }
        (advantages, returns)
    }

    /// (env, t) pairs in the flattening order used by `gae`.
    pub fn flat_indices(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.len());
        for (e, lane) in self.per_env.iter().enumerate() {
            for t in 0..lane.len() {
                out.push((e, t));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PpoStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub kl: f64,
    pub lr: f64,
    pub clip_fraction: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PpoOptim {
    /// Covers actor weights plus the log-std tail.
    pub actor: Adam,
    pub critic: Adam,
}

impl PpoOptim {
    pub fn new(ac: &ActorCritic, cfg: &PpoConfig) -> Self {
        Self {
            actor: Adam::new(ac.actor.params().len() + ACTION_DIM, cfg.lr_init),
            critic: Adam::new(ac.critic.params().len(), cfg.lr_init),
        }
    }
}

/// Run the clipped-surrogate update over one rollout.
pub fn ppo_update<R: Rng>(
    ac: &mut ActorCritic,
    optim: &mut PpoOptim,
    buffer: &RolloutBuffer,
    cfg: &PpoConfig,
    rng: &mut R,
) -> Result<PpoStats, NnError> {
    let indices = buffer.flat_indices();
    let n = indices.len();
    assert!(n > 0, "empty rollout");
    let (mut advantages, returns) = buffer.gae(cfg.discount, cfg.gae_lambda);

    // Per-batch advantage normalization.
    let mean = advantages.iter().sum::<f64>() / n as f64;
    let var = advantages.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n as f64;
    let std = var.sqrt().max(1e-8);
    for a in &mut advantages {
        *a = (*a - mean) / std;
    }

    let actor_len = ac.actor.params().len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut stats = PpoStats::default();
    let mut last_epoch_batches = 0.0;

    for epoch in 0..cfg.epochs {
        order.shuffle(rng);
        let final_epoch = epoch + 1 == cfg.epochs;
        if final_epoch {
            stats.policy_loss = 0.0;
            stats.value_loss = 0.0;
            stats.clip_fraction = 0.0;
            last_epoch_batches = 0.0;
        }
        for chunk in order.chunks(n.div_ceil(cfg.minibatches)) {
            let mb = chunk.len() as f64;
            let mut actor_grads = vec![0.0; actor_len + ACTION_DIM];
            let mut critic_grads = vec![0.0; ac.critic.params().len()];
            let mut mb_policy_loss = 0.0;
            let mut mb_value_loss = 0.0;
            let mut mb_clipped = 0.0;

            for &idx in chunk {
                let (e, t) = indices[idx];
                let tr = &buffer.per_env[e][t];
                let adv = advantages[idx];
                let ret = returns[idx];

                let trace = ac.actor.forward_trace(&tr.obs);
                let mut mean_new = [0.0; ACTION_DIM];
                mean_new.copy_from_slice(trace.output());
                let logp_new = log_prob(&mean_new, &ac.log_std, &tr.action);
                let ratio = (logp_new - tr.logp).exp();
                let clipped = ratio.clamp(1.0 - cfg.clip, 1.0 + cfg.clip);
                let surr_raw = ratio * adv;
                let surr_clip = clipped * adv;
                mb_policy_loss -= surr_raw.min(surr_clip) / mb;
                if surr_raw > surr_clip {
                    mb_clipped += 1.0 / mb;
                }

                // Gradient flows only while the raw surrogate is active.
                if surr_raw <= surr_clip {
                    let coeff = -adv * ratio / mb;
                    let mut grad_mean = [0.0; ACTION_DIM];
                    for i in 0..ACTION_DIM {
                        let sd = ac.log_std[i].exp();
                        let z = (tr.action[i] - mean_new[i]) / sd;
                        // d logp / d mean, d logp / d log_std.
                        grad_mean[i] = coeff * (z / sd);
                        actor_grads[actor_len + i] += coeff * (z * z - 1.0);
                    }
                    ac.actor.backward(&trace, &grad_mean, &mut actor_grads[..actor_len], None);
                }
                if cfg.entropy_coef > 0.0 {
                    for i in 0..ACTION_DIM {
                        actor_grads[actor_len + i] -= cfg.entropy_coef / mb;
                    }
                }

                let ctrace = ac.critic.forward_trace(&tr.critic_obs);
                let v = ctrace.output()[0];
                mb_value_loss += 0.5 * (v - ret) * (v - ret) / mb;
                ac.critic.backward(&ctrace, &[(v - ret) / mb], &mut critic_grads, None);
            }

            {
                let params = ac.actor.params_mut();
                let mut all: Vec<f64> = Vec::with_capacity(actor_len + ACTION_DIM);
                all.extend_from_slice(params);
                all.extend_from_slice(&ac.log_std);
                optim.actor.step(&mut all, &actor_grads)?;
                params.copy_from_slice(&all[..actor_len]);
                for i in 0..ACTION_DIM {
                    ac.log_std[i] = all[actor_len + i].clamp(LOG_STD_MIN, LOG_STD_MAX);
                }
            }
            optim.critic.step(ac.critic.params_mut(), &critic_grads)?;

            if final_epoch {
                stats.policy_loss += mb_policy_loss;
                stats.value_loss += mb_value_loss;
                stats.clip_fraction += mb_clipped;
                last_epoch_batches += 1.0;
            }
        }

        // Learning-rate adaptation from the exact KL over the whole buffer.
        let mut kl_sum = 0.0;
        for &(e, t) in &indices {
            let tr = &buffer.per_env[e][t];
            let mean_new = ac.mean_action(&tr.obs);
            let mut std_new = [0.0; ACTION_DIM];
            for i in 0..ACTION_DIM {
                std_new[i] = ac.log_std[i].exp();
            }
            kl_sum += gaussian_kl(&tr.mean, &tr.std, &mean_new, &std_new);
        }
        let kl = kl_sum / n as f64;
        stats.kl = kl;
        let mut lr = optim.actor.lr;
        if kl > 2.0 * cfg.kl_target {
            lr /= 1.5;
        } else if kl < 0.5 * cfg.kl_target {
            lr *= 1.5;
        }
        lr = lr.clamp(cfg.lr_min, cfg.lr_max);
        optim.actor.lr = lr;
        optim.critic.lr = lr;
    }

    if last_epoch_batches > 0.0 {
        stats.policy_loss /= last_epoch_batches;
        stats.value_loss /= last_epoch_batches;
        stats.clip_fraction /= last_epoch_batches;
    }
    stats.lr = optim.actor.lr;
    stats.entropy = ac
        .log_std
        .iter()
        .map(|ls| ls + 0.5 * (1.0 + (2.0 * std::f64::consts::PI).ln()))
        .sum();
    Ok(stats)
}
