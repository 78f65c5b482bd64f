//! Saliency over a whole episode: which captured shape points the policy
//! actually reads, accumulated while the trained agent acts.

use crate::experiment::trainer::{derive_seed, EstimatorModel, TrainError, Trainer};
use crate::policy::obs::{build_ext_input, build_obs, build_prop_input};
use crate::policy::saliency::{step_point_saliency, PointSaliency, SaliencyStep};
use crate::sim::asset::ObjectAsset;
use crate::sim::Env;
use serde::{Deserialize, Serialize};

/// Per-point attribution masses for one episode, with the captured point
/// positions (world frame at capture) for plotting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SaliencyReport {
    pub object_id: u64,
    pub kind: String,
    pub class: String,
    pub ambiguous: bool,
    pub steps: usize,
    pub handle_points: Vec<[f64; 3]>,
    pub panel_points: Vec<[f64; 3]>,
    /// Mean per-step mass, one entry per captured point.
    pub handle_mass: Vec<f64>,
    pub panel_mass: Vec<f64>,
}

impl SaliencyReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cuboid,point,x,y,z,mass,share\n");
        let total: f64 =
            self.handle_mass.iter().sum::<f64>() + self.panel_mass.iter().sum::<f64>();
        let denom = if total > 0.0 { total } else { 1.0 };
        for (name, points, mass) in [
            ("handle", &self.handle_points, &self.handle_mass),
            ("panel", &self.panel_points, &self.panel_mass),
        ] {
            for i in 0..points.len() {
                out.push_str(&format!(
                    "{},{},{:.6},{:.6},{:.6},{:.9},{:.9}\n",
                    name,
                    i,
                    points[i][0],
                    points[i][1],
                    points[i][2],
                    mass[i],
                    mass[i] / denom,
                ));
            }
        }
        out
    }
}

/// Run one deterministic episode and accumulate point saliency each step.
/// Only the gated estimator exposes the full attribution path.
pub fn saliency_episode(
    trainer: &Trainer,
    asset: &ObjectAsset,
    episode: usize,
    max_steps: usize,
) -> Result<SaliencyReport, TrainError> {
    let est = match &trainer.estimator {
        EstimatorModel::Gated(est) => est,
        _ => return Err(TrainError::NotGated),
    };
    let cfg = &trainer.cfg;
    let mut sim = Trainer::variant_sim_cfg(cfg);
    sim.horizon = cfg.eval_horizon;
    let seed = derive_seed(cfg.seed, 20, episode as u64);
    let mut env = Env::new(sim.clone(), asset.clone(), seed);

    let mut acc = PointSaliency::default();
    let mut steps = 0usize;
    let mut window = Vec::new();
    let mut ext_in = Vec::new();
    let mut prop_in = Vec::new();
    let mut obs = Vec::new();

    let handle_points: Vec<[f64; 3]> =
        env.handle_feature.points().iter().map(|p| [p.x, p.y, p.z]).collect();
    let panel_points: Vec<[f64; 3]> =
        env.panel_feature.points().iter().map(|p| [p.x, p.y, p.z]).collect();

    for _ in 0..max_steps.min(sim.horizon) {
        window.clear();
        env.history_flat(&mut window);
        let latent = trainer.vae.encode_mean(&window);
        build_ext_input(&env, &mut ext_in);
        build_prop_input(&env, &latent, &mut prop_in);
        let (alpha, _) = trainer.estimator.infer(&ext_in, &prop_in, &latent);
        build_obs(&env, &latent, &alpha, &trainer.layout, &mut obs);

        let step = SaliencyStep {
            est,
            actor: &trainer.ac.actor,
            layout: &trainer.layout,
            ext_in: &ext_in,
            prop_in: &prop_in,
            latent: &latent,
            obs: &obs,
        };
        acc.add(&step_point_saliency(&step));
        steps += 1;

        let action = trainer.ac.mean_action(&obs);
        let info = env.step(&action);
        if info.done {
            break;
        }
    }
    if steps > 0 {
        acc.scale(1.0 / steps as f64);
    }
    Ok(SaliencyReport {
        object_id: asset.id,
        kind: format!("{:?}", asset.kind),
        class: format!("{:?}", asset.class),
        ambiguous: asset.ambiguous,
        steps,
        handle_points,
        panel_points,
        handle_mass: acc.handle.to_vec(),
        panel_mass: acc.panel.to_vec(),
    })
}
