//! End-to-end training: vectorized rollouts, policy optimization, and the
//! concurrently trained articulation estimator and history encoder.
//!
//! Everything is seeded and stepped in a fixed order, so two runs from the
//! same configuration produce byte-identical metrics, and a checkpointed
//! run resumes bit-identically.

use crate::artiest::{
    direction_error_deg, ArtiEst, ArtiEstOptim, ArtiEstSample, ArtiEstStats, ALPHA_DIM,
};
use crate::experiment::config::{ExperimentConfig, Variant, CONFIG_FORMAT_VERSION};
use crate::nn::{Activation, Adam, HistoryVae, Mlp, NnError};
use crate::policy::obs::{
    articulation_target, build_critic_obs, build_ext_input, build_obs, build_prop_input, ObsLayout,
};
use crate::policy::ppo::{ppo_update, ActorCritic, PpoOptim, PpoStats, RolloutBuffer, Transition};
use crate::policy::reward::{compute_reward, update_success_ema, RewardInput};
use crate::safe::SHAPE_POINTS;
use crate::sim::asset::generate_split;
use crate::sim::{Env, SimConfig, ACTION_DIM, HISTORY_LEN, PROPRIO_DIM};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("optimizer: {0}")]
    Nn(#[from] NnError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint encoding: {0}")]
    Json(#[from] serde_json::Error),
    #[error("checkpoint version {0} unsupported")]
    CheckpointVersion(u32),
    #[error("checkpoint config hash {stored} does not match its config ({actual})")]
    HashMismatch { stored: String, actual: String },
    #[error("saliency needs the gated estimator")]
    NotGated,
}

/// Two independent streams from one master seed, mixed so nearby tags and
/// indices land far apart.
pub fn derive_seed(master: u64, tag: u64, index: u64) -> u64 {
    let mut x = master
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(tag.wrapping_mul(0xBF58_476D_1CE4_E5B9))
        .wrapping_add(index.wrapping_mul(0x94D0_49BB_1331_11EB));
    x ^= x >> 30;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// The articulation estimator under the configured variant.
///
/// Logged gamma conventions where no gate exists: a mono estimator reports
/// 0.5, an ext-only estimator 0. Loss slots it does not have read 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum EstimatorModel {
    Gated(ArtiEst),
    /// One unmasked regressor on the proprioceptive input.
    Mono(Mlp),
    /// The exteroceptive regressor alone.
    ExtOnly(Mlp),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum EstimatorOptim {
    Gated(ArtiEstOptim),
    Single(Adam),
}

impl EstimatorModel {
    pub fn new(variant: Variant, layout: &ObsLayout, cfg: &crate::artiest::ArtiEstConfig, rng: &mut ChaCha8Rng) -> Self {
        match variant {
            Variant::MonoEstimator => {
                let mut sizes = vec![layout.prop_input_dim()];
                sizes.extend_from_slice(&cfg.prop_hidden);
                sizes.push(ALPHA_DIM);
                let mut net = Mlp::new(sizes, Activation::Identity, rng);
                net.zero_final_layer();
                EstimatorModel::Mono(net)
            }
            Variant::NoPropEstimator => {
                let mut sizes = vec![layout.ext_input_dim()];
                sizes.extend_from_slice(&cfg.ext_hidden);
                sizes.push(ALPHA_DIM);
                let mut net = Mlp::new(sizes, Activation::Identity, rng);
                net.zero_final_layer();
                EstimatorModel::ExtOnly(net)
            }
            _ => EstimatorModel::Gated(ArtiEst::new(
                layout.ext_input_dim(),
                layout.prop_input_dim(),
                layout.latent_dim,
                cfg.clone(),
                rng,
            )),
        }
    }

    pub fn optim(&self, lr: f64) -> EstimatorOptim {
        match self {
            EstimatorModel::Gated(est) => EstimatorOptim::Gated(ArtiEstOptim::new(est)),
            EstimatorModel::Mono(net) | EstimatorModel::ExtOnly(net) => {
                EstimatorOptim::Single(Adam::new(net.params().len(), lr))
            }
        }
    }

    /// Blend actually fed to the policy, plus the logged gamma.
    pub fn infer(&self, ext_in: &[f64], prop_in: &[f64], latent: &[f64]) -> ([f64; ALPHA_DIM], f64) {
        match self {
            EstimatorModel::Gated(est) => {
                let out = est.forward(ext_in, prop_in, latent);
                (out.alpha_mix, out.gamma)
            }
            EstimatorModel::Mono(net) => {
                let out = net.forward(prop_in);
                let mut a = [0.0; ALPHA_DIM];
                a.copy_from_slice(&out);
                (a, 0.5)
            }
            EstimatorModel::ExtOnly(net) => {
                let out = net.forward(ext_in);
                let mut a = [0.0; ALPHA_DIM];
                a.copy_from_slice(&out);
                (a, 0.0)
            }
        }
    }

    /// Minibatch training over one rollout's samples.
    pub fn train(
        &mut self,
        optim: &mut EstimatorOptim,
        samples: &[ArtiEstSample],
        epochs: usize,
        minibatches: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<ArtiEstStats, NnError> {
        if samples.is_empty() {
            return Ok(ArtiEstStats::default());
        }
        let mut indices: Vec<usize> = (0..samples.len()).collect();
        let mb = samples.len().div_ceil(minibatches);
        let mut acc = ArtiEstStats::default();
        let mut batches = 0usize;
        for _ in 0..epochs {
            indices.shuffle(rng);
            for chunk in indices.chunks(mb) {
                let batch: Vec<ArtiEstSample> = chunk.iter().map(|&i| samples[i].clone()).collect();
                let stats = match (&mut *self, &mut *optim) {
                    (EstimatorModel::Gated(est), EstimatorOptim::Gated(opt)) => {
                        let (grads, stats) = est.batch_gradients(&batch);
                        est.apply(&grads, opt)?;
                        stats
                    }
                    (EstimatorModel::Mono(net), EstimatorOptim::Single(adam)) => {
                        let loss = single_net_step(net, adam, &batch, false)?;
                        ArtiEstStats {
                            ext_loss: 0.0,
                            prop_loss: loss,
                            mix_loss: loss,
                            mean_gamma: 0.5,
                            opening_count: batch.iter().filter(|s| s.opening).count(),
                        }
                    }
                    (EstimatorModel::ExtOnly(net), EstimatorOptim::Single(adam)) => {
                        let loss = single_net_step(net, adam, &batch, true)?;
                        ArtiEstStats {
                            ext_loss: loss,
                            prop_loss: 0.0,
                            mix_loss: loss,
                            mean_gamma: 0.0,
                            opening_count: batch.iter().filter(|s| s.opening).count(),
                        }
                    }
                    _ => unreachable!("estimator and optimizer variants always match"),
                };
                acc.ext_loss += stats.ext_loss;
                acc.prop_loss += stats.prop_loss;
                acc.mix_loss += stats.mix_loss;
                acc.mean_gamma += stats.mean_gamma;
                acc.opening_count += stats.opening_count;
                batches += 1;
            }
        }
        let b = batches as f64;
        acc.ext_loss /= b;
        acc.prop_loss /= b;
        acc.mix_loss /= b;
        acc.mean_gamma /= b;
        Ok(acc)
    }
}

/// One MSE step for a lone regressor; mean over dims and batch.
fn single_net_step(
    net: &mut Mlp,
    adam: &mut Adam,
    batch: &[ArtiEstSample],
    ext_input: bool,
) -> Result<f64, NnError> {
    let n = batch.len() as f64;
    let dim = ALPHA_DIM as f64;
    let mut grads = vec![0.0; net.params().len()];
    let mut loss = 0.0;
    for s in batch {
        let input = if ext_input { &s.ext_in } else { &s.prop_in };
        let trace = net.forward_trace(input);
        let out = trace.output().to_vec();
        let mut grad_out = [0.0; ALPHA_DIM];
        for d in 0..ALPHA_DIM {
            let err = out[d] - s.target[d];
            loss += err * err / (dim * n);
            grad_out[d] = 2.0 * err / (dim * n);
        }
        net.backward(&trace, &grad_out, &mut grads, None);
    }
    adam.step(net.params_mut(), &grads)?;
    Ok(loss)
}

/// One line of the training log. No wall-clock fields: two identical runs
/// serialize identically.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Per-step means, ordered as `RewardTerms::NAMES`.
    pub reward_terms: [f64; 8],
    pub reward_mean: f64,
    /// Episodes finished during this iteration and how many succeeded.
    pub episodes: usize,
    pub successes: usize,
    /// Success EMA gating the action penalties.
    pub lambda: f64,
    pub kl: f64,
    pub lr: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub clip_fraction: f64,
    pub est_ext_loss: f64,
    pub est_prop_loss: f64,
    pub est_mix_loss: f64,
    pub est_mean_gamma: f64,
    pub vae_loss: f64,
    /// Mean direction error (degrees) of the blend against the true cue,
    /// split by whether the handle was held when the estimate was made.
    pub dir_err_before: Option<f64>,
    pub dir_err_during: Option<f64>,
    pub gamma_before: Option<f64>,
    pub gamma_during: Option<f64>,
}

pub fn records_to_jsonl(records: &[IterationRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

/// Small accumulator for optional bucketed means.
#[derive(Default, Clone, Copy)]
struct Bucket {
    sum: f64,
    n: usize,
}

impl Bucket {
    fn push(&mut self, v: f64) {
        self.sum += v;
        self.n += 1;
    }
    fn mean(&self) -> Option<f64> {
        (self.n > 0).then(|| self.sum / self.n as f64)
    }
}

pub struct Trainer {
    pub cfg: ExperimentConfig,
    pub layout: ObsLayout,
    pub envs: Vec<Env>,
    pub ac: ActorCritic,
    pub ppo_optim: PpoOptim,
    pub estimator: EstimatorModel,
    pub est_optim: EstimatorOptim,
    pub vae: HistoryVae,
    pub vae_enc_optim: Adam,
    pub vae_dec_optim: Adam,
    pub lambda: f64,
    pub iteration: usize,
    pub episodes_total: usize,
    pub successes_total: usize,
    /// Command history for reward shaping: (previous, one before that).
    /// Zeros at episode start, separate from what proprioception reports.
    cmd_hist: Vec<([f64; ACTION_DIM], [f64; ACTION_DIM])>,
    action_rngs: Vec<ChaCha8Rng>,
    update_rng: ChaCha8Rng,
    vae_rng: ChaCha8Rng,
}

impl Trainer {
    /// Simulator settings as the variant adjusts them.
    pub fn variant_sim_cfg(cfg: &ExperimentConfig) -> SimConfig {
        let mut sim = cfg.sim.clone();
        sim.corner_features = matches!(cfg.variant, Variant::NoSampling);
        sim
    }

    pub fn layout_for(cfg: &ExperimentConfig) -> ObsLayout {
        ObsLayout::new(
            cfg.latent_dim,
            SHAPE_POINTS * 3,
            !matches!(cfg.variant, Variant::NoHandleShape),
        )
    }

    pub fn new(cfg: ExperimentConfig) -> Result<Self, crate::experiment::config::ConfigError> {
        cfg.validate()?;
        let layout = Self::layout_for(&cfg);
        let sim = Self::variant_sim_cfg(&cfg);
        let (train_assets, _) = generate_split(&cfg.assets);
        let envs: Vec<Env> = (0..cfg.n_envs)
            .map(|e| {
                Env::new(
                    sim.clone(),
                    train_assets[e % train_assets.len()].clone(),
                    derive_seed(cfg.seed, 1, e as u64),
                )
            })
            .collect();
        // Network construction order is fixed; it defines what the master
        // init stream means.
        let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0, 0));
        let ac = ActorCritic::new(
            layout.obs_dim(),
            layout.critic_obs_dim(cfg.ppo.critic_privileged),
            &cfg.ppo,
            &mut init_rng,
        );
        let estimator = EstimatorModel::new(cfg.variant, &layout, &cfg.artiest, &mut init_rng);
        let vae = HistoryVae::new(
            HISTORY_LEN * PROPRIO_DIM,
            PROPRIO_DIM,
            cfg.latent_dim,
            &cfg.enc_hidden,
            &cfg.dec_hidden,
            cfg.vae_beta,
            &mut init_rng,
        );
        let ppo_optim = PpoOptim::new(&ac, &cfg.ppo);
        let est_optim = estimator.optim(cfg.artiest.lr);
        let vae_enc_optim = Adam::new(vae.encoder.params().len(), cfg.vae_lr);
        let vae_dec_optim = Adam::new(vae.decoder.params().len(), cfg.vae_lr);
        let action_rngs = (0..cfg.n_envs)
            .map(|e| ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 2, e as u64)))
            .collect();
        let update_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 3, 0));
        let vae_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 4, 0));
        let n_envs = cfg.n_envs;
        Ok(Self {
            cfg,
            layout,
            envs,
            ac,
            ppo_optim,
            estimator,
            est_optim,
            vae,
            vae_enc_optim,
            vae_dec_optim,
            lambda: 0.0,
            iteration: 0,
            episodes_total: 0,
            successes_total: 0,
            cmd_hist: vec![([0.0; ACTION_DIM], [0.0; ACTION_DIM]); n_envs],
            action_rngs,
            update_rng,
            vae_rng,
        })
    }

    /// Collect one rollout, update every learner, return the log record.
    pub fn train_iteration(&mut self) -> Result<IterationRecord, TrainError> {
        let n_envs = self.cfg.n_envs;
        let t_len = self.cfg.rollout_len;
        let mut buffer = RolloutBuffer::new(n_envs);
        let mut est_samples: Vec<ArtiEstSample> = Vec::with_capacity(n_envs * t_len);
        let mut vae_windows: Vec<Vec<f64>> = Vec::with_capacity(n_envs * t_len);

        let mut term_sums = [0.0; 8];
        let mut reward_sum = 0.0;
        let mut episodes = 0usize;
        let mut successes = 0usize;
        let mut err_before = Bucket::default();
        let mut err_during = Bucket::default();
        let mut gamma_before = Bucket::default();
        let mut gamma_during = Bucket::default();

        let mut window = Vec::with_capacity(HISTORY_LEN * PROPRIO_DIM);
        let mut ext_in = Vec::new();
        let mut prop_in = Vec::new();
        let mut obs = Vec::new();
        let mut critic_obs = Vec::new();

        for _t in 0..t_len {
            for e in 0..n_envs {
                let env = &mut self.envs[e];
                window.clear();
                env.history_flat(&mut window);
                let latent = self.vae.encode_mean(&window);
                build_ext_input(env, &mut ext_in);
                build_prop_input(env, &latent, &mut prop_in);
                let (alpha, gamma) = self.estimator.infer(&ext_in, &prop_in, &latent);
                build_obs(env, &latent, &alpha, &self.layout, &mut obs);
                build_critic_obs(&obs, env.xi_norm(), self.cfg.ppo.critic_privileged, &mut critic_obs);

                let target = articulation_target(env);
                let held = env.grasped;
                let opening = held && env.xi_norm() > 0.0;
                let err = direction_error_deg(&alpha, &target);
                if held {
                    err_during.push(err);
                    gamma_during.push(gamma);
                } else {
                    err_before.push(err);
                    gamma_before.push(gamma);
                }

                let sampled = self.ac.sample_action(&obs, &mut self.action_rngs[e]);
                let value = self.ac.value(&critic_obs);
                let info = env.step(&sampled.action);

                let reward_in = RewardInput {
                    xi_norm: info.xi_norm,
                    ee_pos: info.ee_world.position,
                    handle_pos: info.handle_center,
                    align_angle: info.align_angle,
                    grasped: info.grasped,
                    collision: info.collision,
                    cmd: info.cmd,
                    prev_cmd: self.cmd_hist[e].0,
                    prev_prev_cmd: self.cmd_hist[e].1,
                    lambda: self.lambda,
                };
                let terms = compute_reward(&reward_in, &self.cfg.reward);
                let arr = terms.as_array();
                for (sum, v) in term_sums.iter_mut().zip(arr) {
                    *sum += v;
                }
                let reward = terms.total();
                reward_sum += reward;

                buffer.per_env[e].push(Transition {
                    obs: obs.clone(),
                    critic_obs: critic_obs.clone(),
                    action: sampled.action,
                    mean: sampled.mean,
                    std: sampled.std,
                    logp: sampled.logp,
                    value,
                    reward,
                    done: info.done,
                });
                est_samples.push(ArtiEstSample {
                    ext_in: ext_in.clone(),
                    prop_in: prop_in.clone(),
                    latent,
                    target,
                    opening,
                });
                vae_windows.push(window.clone());

                self.cmd_hist[e] = (info.cmd, self.cmd_hist[e].0);
                if info.done {
                    self.lambda =
                        update_success_ema(self.lambda, info.success, self.cfg.reward.success_ema_rate);
                    episodes += 1;
                    self.episodes_total += 1;
                    if info.success {
                        successes += 1;
                        self.successes_total += 1;
                    }
                    env.reset();
                    self.cmd_hist[e] = ([0.0; ACTION_DIM], [0.0; ACTION_DIM]);
                }
            }
        }

        // Value bootstrap at the post-rollout state of each env.
        for e in 0..n_envs {
            let env = &self.envs[e];
            window.clear();
            env.history_flat(&mut window);
            let latent = self.vae.encode_mean(&window);
            build_ext_input(env, &mut ext_in);
            build_prop_input(env, &latent, &mut prop_in);
            let (alpha, _) = self.estimator.infer(&ext_in, &prop_in, &latent);
            build_obs(env, &latent, &alpha, &self.layout, &mut obs);
            build_critic_obs(&obs, env.xi_norm(), self.cfg.ppo.critic_privileged, &mut critic_obs);
            buffer.bootstrap[e] = self.ac.value(&critic_obs);
        }

        let ppo_stats: PpoStats =
            ppo_update(&mut self.ac, &mut self.ppo_optim, &buffer, &self.cfg.ppo, &mut self.update_rng)?;

        let est_stats = self.estimator.train(
            &mut self.est_optim,
            &est_samples,
            self.cfg.aux_epochs,
            self.cfg.aux_minibatches,
            &mut self.update_rng,
        )?;

        let vae_loss = self.train_vae(&vae_windows)?;

        self.iteration += 1;
        let n_steps = (n_envs * t_len) as f64;
        let mut reward_terms = [0.0; 8];
        for (out, sum) in reward_terms.iter_mut().zip(term_sums) {
            *out = sum / n_steps;
        }
        Ok(IterationRecord {
            iteration: self.iteration,
            reward_terms,
            reward_mean: reward_sum / n_steps,
            episodes,
            successes,
            lambda: self.lambda,
            kl: ppo_stats.kl,
            lr: ppo_stats.lr,
            policy_loss: ppo_stats.policy_loss,
            value_loss: ppo_stats.value_loss,
            clip_fraction: ppo_stats.clip_fraction,
            est_ext_loss: est_stats.ext_loss,
            est_prop_loss: est_stats.prop_loss,
            est_mix_loss: est_stats.mix_loss,
            est_mean_gamma: est_stats.mean_gamma,
            vae_loss,
            dir_err_before: err_before.mean(),
            dir_err_during: err_during.mean(),
            gamma_before: gamma_before.mean(),
            gamma_during: gamma_during.mean(),
        })
    }

    /// Reconstruction training over the rollout's history windows. The
    /// target of each window is its own newest frame.
    fn train_vae(&mut self, windows: &[Vec<f64>]) -> Result<f64, TrainError> {
        if windows.is_empty() {
            return Ok(0.0);
        }
        let mut indices: Vec<usize> = (0..windows.len()).collect();
        let mb = windows.len().div_ceil(self.cfg.aux_minibatches);
        let mut loss_sum = 0.0;
        let mut loss_count = 0usize;
        let frame = PROPRIO_DIM;
        for _ in 0..self.cfg.aux_epochs {
            indices.shuffle(&mut self.update_rng);
            for chunk in indices.chunks(mb) {
                let scale = 1.0 / chunk.len() as f64;
                let mut grad_enc = vec![0.0; self.vae.encoder.params().len()];
                let mut grad_dec = vec![0.0; self.vae.decoder.params().len()];
                for &i in chunk {
                    let w = &windows[i];
                    let target = &w[w.len() - frame..];
                    let trace = self.vae.forward_sample(w, &mut self.vae_rng);
                    let (mse, kl) = self.vae.loss(&trace, target);
                    loss_sum += mse + self.vae.beta * kl;
                    loss_count += 1;
                    self.vae.backward(&trace, target, scale, &mut grad_enc, &mut grad_dec);
                }
                self.vae_enc_optim.step(self.vae.encoder.params_mut(), &grad_enc)?;
                self.vae_dec_optim.step(self.vae.decoder.params_mut(), &grad_dec)?;
            }
        }
        Ok(loss_sum / loss_count as f64)
    }

    /// Train for up to `iterations`, stopping early once the success EMA
    /// clears the configured bar. The callback sees each record as it is
    /// produced.
    pub fn run<F: FnMut(&IterationRecord)>(
        &mut self,
        iterations: usize,
        mut on_iter: F,
    ) -> Result<Vec<IterationRecord>, TrainError> {
        let mut records = Vec::with_capacity(iterations);
        for _ in 0..iterations {
            let record = self.train_iteration()?;
            on_iter(&record);
            records.push(record);
            if self.cfg.early_stop_lambda > 0.0 && self.lambda >= self.cfg.early_stop_lambda {
                break;
            }
        }
        Ok(records)
    }

    pub fn train(&mut self) -> Result<Vec<IterationRecord>, TrainError> {
        let n = self.cfg.iterations;
        self.run(n, |_| {})
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            version: CONFIG_FORMAT_VERSION,
            config_hash: self.cfg.hash(),
            config: self.cfg.clone(),
            iteration: self.iteration,
            lambda: self.lambda,
            episodes_total: self.episodes_total,
            successes_total: self.successes_total,
            ac: self.ac.clone(),
            ppo_optim: self.ppo_optim.clone(),
            estimator: self.estimator.clone(),
            est_optim: self.est_optim.clone(),
            vae: self.vae.clone(),
            vae_enc_optim: self.vae_enc_optim.clone(),
            vae_dec_optim: self.vae_dec_optim.clone(),
            envs: self.envs.clone(),
            cmd_hist: self.cmd_hist.clone(),
            action_rngs: self.action_rngs.clone(),
            update_rng: self.update_rng.clone(),
            vae_rng: self.vae_rng.clone(),
        }
    }

    pub fn from_checkpoint(cp: Checkpoint) -> Result<Self, TrainError> {
        if cp.version != CONFIG_FORMAT_VERSION {
            return Err(TrainError::CheckpointVersion(cp.version));
        }
        let actual = cp.config.hash();
        if actual != cp.config_hash {
            return Err(TrainError::HashMismatch { stored: cp.config_hash, actual });
        }
        let layout = Self::layout_for(&cp.config);
        Ok(Self {
            layout,
            cfg: cp.config,
            envs: cp.envs,
            ac: cp.ac,
            ppo_optim: cp.ppo_optim,
            estimator: cp.estimator,
            est_optim: cp.est_optim,
            vae: cp.vae,
            vae_enc_optim: cp.vae_enc_optim,
            vae_dec_optim: cp.vae_dec_optim,
            lambda: cp.lambda,
            iteration: cp.iteration,
            episodes_total: cp.episodes_total,
            successes_total: cp.successes_total,
            cmd_hist: cp.cmd_hist,
            action_rngs: cp.action_rngs,
            update_rng: cp.update_rng,
            vae_rng: cp.vae_rng,
        })
    }

    pub fn save_checkpoint(&self, path: &std::path::Path) -> Result<(), TrainError> {
        let file = std::fs::File::create(path)?;
        let mut writer = std::io::BufWriter::new(file);
        serde_json::to_writer(&mut writer, &self.to_checkpoint())?;
        use std::io::Write;
        writer.flush()?;
        Ok(())
    }

    pub fn load_checkpoint(path: &std::path::Path) -> Result<Self, TrainError> {
        let file = std::fs::File::open(path)?;
        let reader = std::io::BufReader::new(file);
        let cp: Checkpoint = serde_json::from_reader(reader)?;
        Self::from_checkpoint(cp)
    }
}

/// Full training state. A loaded checkpoint continues exactly where the
/// saved run stopped, including every RNG stream.
#[derive(Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub iteration: usize,
    pub lambda: f64,
    pub episodes_total: usize,
    pub successes_total: usize,
    pub ac: ActorCritic,
    pub ppo_optim: PpoOptim,
    pub estimator: EstimatorModel,
    pub est_optim: EstimatorOptim,
    pub vae: HistoryVae,
    pub vae_enc_optim: Adam,
    pub vae_dec_optim: Adam,
    pub envs: Vec<Env>,
    pub cmd_hist: Vec<([f64; ACTION_DIM], [f64; ACTION_DIM])>,
    pub action_rngs: Vec<ChaCha8Rng>,
    pub update_rng: ChaCha8Rng,
    pub vae_rng: ChaCha8Rng,
}
