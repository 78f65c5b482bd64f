//! Library for learning to open articulated objects (doors, drawers, cabinets)
//! with a floating-gripper agent on a mobile base.
//!
//! The pipeline: procedural object assets -> sampled shape features ->
//! a gated articulation estimator -> shaped rewards -> PPO training,
//! all deterministic given a seed.

pub mod artiest;
pub mod experiment;
pub mod geometry;
pub mod nn;
pub mod policy;
pub mod safe;
pub mod sim;

pub use artiest::{direction_error_deg, mix_alpha, ArtiEst, ArtiEstConfig, ALPHA_DIM};
pub use experiment::config::{ExperimentConfig, Variant};
pub use experiment::evalrun::{evaluate, EvalReport};
pub use experiment::trainer::{IterationRecord, Trainer};
pub use geometry::{Cuboid, JointKind, JointSpec, Pose};
pub use nn::{Activation, Adam, HistoryVae, Mlp, NnError};
pub use policy::{compute_reward, ActorCritic, ObsLayout, PpoConfig, RewardConfig};
pub use safe::{sample_cuboid_points, ShapeFeature};
pub use sim::asset::{generate_split, AssetGenConfig, ObjectAsset};
pub use sim::{Env, SimConfig, ACTION_DIM, HISTORY_LEN, PROPRIO_DIM};
