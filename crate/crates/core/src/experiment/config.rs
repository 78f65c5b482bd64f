//! Experiment configuration: one TOML document controls a whole run.
//!
//! The document is versioned and hashed; the hash is embedded in metrics,
//! reports, and checkpoints so outputs can always be traced to the exact
//! configuration that produced them.

use crate::artiest::ArtiEstConfig;
use crate::policy::ppo::PpoConfig;
use crate::policy::reward::RewardConfig;
use crate::sim::asset::AssetGenConfig;
use crate::sim::SimConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const CONFIG_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("toml: {0}")]
    Toml(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("unsupported config version {0}")]
    Version(u32),
    #[error("invalid value: {0}")]
    Invalid(String),
    #[error("override path {0:?} does not exist")]
    BadOverridePath(String),
    #[error("override must look like key.path=value, got {0:?}")]
    BadOverrideSyntax(String),
}

/// Model variant under test. `Full` is the complete system; the others
/// remove one ingredient at a time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Full,
    /// Actor sees only the captured handle center, not its shape feature.
    NoHandleShape,
    /// Shape features are the 8 cuboid corners verbatim, no sampling, no sort.
    NoSampling,
    /// One unmasked regressor replaces the gated pair.
    MonoEstimator,
    /// Exteroceptive estimator only; no gate, no proprioceptive branch.
    NoPropEstimator,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub version: u32,
    pub seed: u64,
    pub variant: Variant,
    pub n_envs: usize,
    pub iterations: usize,
    pub rollout_len: usize,
    /// Stop training once the success EMA reaches this value; 0 disables.
    pub early_stop_lambda: f64,
    pub latent_dim: usize,
    pub vae_beta: f64,
    pub vae_lr: f64,
    pub enc_hidden: Vec<usize>,
    pub dec_hidden: Vec<usize>,
    /// Epochs over the rollout for the estimator and the history encoder.
    pub aux_epochs: usize,
    pub aux_minibatches: usize,
    pub eval_episodes_per_object: usize,
    pub eval_horizon: usize,
    pub sim: SimConfig,
    pub reward: RewardConfig,
    pub ppo: PpoConfig,
    pub artiest: ArtiEstConfig,
    pub assets: AssetGenConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_FORMAT_VERSION,
            seed: 1,
            variant: Variant::Full,
            n_envs: 256,
            iterations: 3000,
            rollout_len: 16,
            early_stop_lambda: 0.0,
            latent_dim: 16,
            vae_beta: 0.1,
            vae_lr: 5e-4,
            enc_hidden: vec![64],
            dec_hidden: vec![64],
            aux_epochs: 1,
            aux_minibatches: 4,
            eval_episodes_per_object: 10,
            eval_horizon: 750,
            sim: SimConfig::default(),
            reward: RewardConfig::default(),
            ppo: PpoConfig::default(),
            artiest: ArtiEstConfig::default(),
            assets: AssetGenConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Toml(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), ConfigError> {
        Ok(std::fs::write(path, self.to_toml_string())?)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.version != CONFIG_FORMAT_VERSION {
            return Err(ConfigError::Version(self.version));
        }
        let positive = [
            ("n_envs", self.n_envs),
            ("iterations", self.iterations),
            ("latent_dim", self.latent_dim),
            ("aux_epochs", self.aux_epochs),
            ("aux_minibatches", self.aux_minibatches),
            ("eval_episodes_per_object", self.eval_episodes_per_object),
            ("eval_horizon", self.eval_horizon),
            ("ppo.epochs", self.ppo.epochs),
            ("ppo.minibatches", self.ppo.minibatches),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(ConfigError::Invalid(format!("{name} must be positive")));
            }
        }
        if self.rollout_len < 2 {
            return Err(ConfigError::Invalid("rollout_len must be at least 2".into()));
        }
        if !(self.sim.dt > 0.0) {
            return Err(ConfigError::Invalid("sim.dt must be positive".into()));
        }
        if self.assets.n_train == 0 || self.assets.n_test == 0 {
            return Err(ConfigError::Invalid("asset split sizes must be positive".into()));
        }
        Ok(())
    }

    /// Stable short fingerprint of the full configuration.
    pub fn hash(&self) -> String {
        let canon = self.to_toml_string();
        let digest = Sha256::digest(canon.as_bytes());
        let mut s = String::with_capacity(16);
        for b in &digest[..8] {
            s.push_str(&format!("{b:02x}"));
        }
        s
    }

    /// Apply `key.path=value` overrides on the TOML representation, then
    /// re-validate. Values parse as TOML scalars, falling back to strings.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<(), ConfigError> {
        if overrides.is_empty() {
            return Ok(());
        }
        let mut tree: toml::Value =
            toml::Value::try_from(&*self).map_err(|e| ConfigError::Toml(e.to_string()))?;
        for pair in overrides {
            let (path, raw) = pair
                .split_once('=')
                .ok_or_else(|| ConfigError::BadOverrideSyntax(pair.clone()))?;
            let value = parse_override_scalar(raw);
            let segments: Vec<&str> = path.split('.').collect();
            let (last, parents) = segments.split_last().expect("split produces at least one");
            let mut node = &mut tree;
            for seg in parents {
                node = node
                    .as_table_mut()
                    .and_then(|t| t.get_mut(*seg))
                    .ok_or_else(|| ConfigError::BadOverridePath(path.to_string()))?;
            }
            let table = node
                .as_table_mut()
                .ok_or_else(|| ConfigError::BadOverridePath(path.to_string()))?;
            if !table.contains_key(*last) {
                return Err(ConfigError::BadOverridePath(path.to_string()));
            }
            table.insert(last.to_string(), value);
        }
        let updated: Self = tree.try_into().map_err(|e| ConfigError::Toml(e.to_string()))?;
        updated.validate()?;
        *self = updated;
        Ok(())
    }
}

/// Parse an override value as a TOML scalar (int, float, bool, array, string).
/// Bare words that are not valid TOML become strings.
fn parse_override_scalar(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut table) => table.remove("v").expect("key v was just written"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_roundtrip_preserves_config() {
        let cfg = ExperimentConfig::default();
        let text = cfg.to_toml_string();
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(back.to_toml_string(), text);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::default();
        let mut b = ExperimentConfig::default();
        b.seed = 2;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
    }

    #[test]
    fn overrides_reach_nested_fields() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_overrides(&[
            "seed=9".to_string(),
            "ppo.clip=0.3".to_string(),
            "sim.horizon=200".to_string(),
            "variant=no_sampling".to_string(),
        ])
        .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.ppo.clip, 0.3);
        assert_eq!(cfg.sim.horizon, 200);
        assert_eq!(cfg.variant, Variant::NoSampling);
    }

    #[test]
    fn bad_override_paths_are_rejected() {
        let mut cfg = ExperimentConfig::default();
        assert!(matches!(
            cfg.apply_overrides(&["nonexistent.key=1".into()]),
            Err(ConfigError::BadOverridePath(_))
        ));
        assert!(matches!(
            cfg.apply_overrides(&["no_equals_sign".into()]),
            Err(ConfigError::BadOverrideSyntax(_))
        ));
        // Typos inside a valid table are caught too.
        assert!(matches!(
            cfg.apply_overrides(&["ppo.cliip=0.3".into()]),
            Err(ConfigError::BadOverridePath(_))
        ));
    }

    #[test]
    fn validation_rejects_bad_values() {
        let mut cfg = ExperimentConfig::default();
        cfg.n_envs = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.version = 99;
        assert!(matches!(cfg.validate(), Err(ConfigError::Version(99))));
    }
}
