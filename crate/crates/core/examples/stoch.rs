//! Scratch: sampled-action rollout success on the train split.
use artopen::experiment::trainer::Trainer;
use artopen::policy::obs::{build_ext_input, build_prop_input, build_obs};
use artopen::sim::Env;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let path = std::env::args().nth(1).unwrap_or("/tmp/probe4/checkpoint.json".into());
    let trainer = Trainer::load_checkpoint(std::path::Path::new(&path)).unwrap();
    let cfg = &trainer.cfg;
    let assets = artopen::sim::asset::generate_split(&cfg.assets).0;
    let mut sim = cfg.sim.clone();
    sim.horizon = cfg.eval_horizon;
    let mut succ = 0usize;
    let mut eps = 0usize;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (mut window, mut ext_in, mut prop_in, mut obs) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (oi, asset) in assets.iter().enumerate() {
        for ep in 0..2u64 {
            let mut env = Env::new(sim.clone(), asset.clone(), 7_000 + oi as u64 * 100 + ep);
            for _ in 0..sim.horizon {
                window.clear();
                env.history_flat(&mut window);
                let latent = trainer.vae.encode_mean(&window);
                build_ext_input(&env, &mut ext_in);
                build_prop_input(&env, &latent, &mut prop_in);
                let (alpha, _g) = trainer.estimator.infer(&ext_in, &prop_in, &latent);
                build_obs(&env, &latent, &alpha, &trainer.layout, &mut obs);
                let action = trainer.ac.sample_action(&obs, &mut rng).action;
                let info = env.step(&action);
                if info.done { break; }
            }
            eps += 1;
            if env.success { succ += 1; }
        }
    }
    println!("sampled-action: {}/{} = {:.3}", succ, eps, succ as f64 / eps as f64);
}
