//! Policy stack: observations, rewards, the PPO learner, and input
//! attribution over shape points.

pub mod obs;
pub mod ppo;
pub mod reward;
pub mod saliency;

pub use obs::ObsLayout;
pub use ppo::{ActorCritic, PpoConfig, PpoOptim, RolloutBuffer, Transition};
pub use reward::{compute_reward, RewardConfig, RewardInput, RewardTerms};
