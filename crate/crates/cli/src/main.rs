//! Command-line frontend for the articulated-object opening pipeline:
//! training, evaluation, variant ablations, feature diagnostics, and
//! saliency dumps. Every command writes plain-text artifacts (TOML config,
//! JSONL metrics, JSON checkpoints, CSV reports, text assets).

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use artopen::experiment::config::{ExperimentConfig, Variant};
use artopen::experiment::dpi::run_dpi;
use artopen::experiment::evalrun::{
    evaluate, per_object_csv, summary_csv, EvalReport, EvalStepRecord, SplitTag,
};
use artopen::experiment::saliencyrun::saliency_episode;
use artopen::experiment::trainer::Trainer;
use artopen::sim::asset::{generate_split, AssetGenConfig, ObjectAsset};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "artopen",
    version,
    about = "Train and analyze policies that open articulated objects"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a configuration file populated with defaults
    InitConfig(InitConfigArgs),
    /// Generate the procedural object splits as text asset files
    GenAssets(GenAssetsArgs),
    /// Train a policy; writes resolved config, metrics JSONL, checkpoints
    Train(TrainArgs),
    /// Evaluate a checkpoint on the train and test splits
    Eval(EvalArgs),
    /// Train and evaluate several model variants from one base config
    Ablate(AblateArgs),
    /// Compare shape-feature encodings by train/test distribution divergence
    Dpi(DpiArgs),
    /// Dump per-point saliency of the articulation estimate
    Saliency(SaliencyArgs),
}

#[derive(Args)]
struct InitConfigArgs {
    /// Destination file
    #[arg(long, default_value = "config.toml")]
    out: PathBuf,
    /// Override a field, e.g. --set ppo.clip=0.3 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Args)]
struct GenAssetsArgs {
    /// Directory for the train/ and test/ asset files
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = AssetGenConfig::default().n_train)]
    n_train: usize,
    #[arg(long, default_value_t = AssetGenConfig::default().n_test)]
    n_test: usize,
    #[arg(long, default_value_t = AssetGenConfig::default().seed_base_train)]
    seed_base_train: u64,
    #[arg(long, default_value_t = AssetGenConfig::default().seed_base_test)]
    seed_base_test: u64,
    #[arg(long, default_value_t = AssetGenConfig::default().p_ambiguous)]
    p_ambiguous: f64,
}

#[derive(Args)]
struct TrainArgs {
    /// Configuration file; defaults apply when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config field, e.g. --set n_envs=64 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Output directory for config.toml, metrics.jsonl, checkpoint.json
    #[arg(long)]
    out_dir: PathBuf,
    /// Continue from a checkpoint; the stored config wins, so --config and
    /// --set are rejected alongside this
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Also save checkpoint_iter<N>.json every N iterations
    #[arg(long)]
    checkpoint_every: Option<usize>,
    /// Print a progress line every N iterations
    #[arg(long, default_value_t = 10)]
    log_every: usize,
}

#[derive(Args)]
struct EvalArgs {
    /// Trained checkpoint to evaluate
    #[arg(long)]
    checkpoint: PathBuf,
    /// Output directory for the CSV and JSON reports
    #[arg(long)]
    out_dir: PathBuf,
    /// Also write every evaluation step to eval_steps.csv
    #[arg(long)]
    steps: bool,
}

#[derive(Args)]
struct AblateArgs {
    /// Base configuration file; defaults apply when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a base-config field before the variant is applied (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Parent directory; each variant trains into its own subdirectory
    #[arg(long)]
    out_dir: PathBuf,
    /// Comma-separated variant list
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "full,no_handle_shape,no_sampling,mono_estimator,no_prop_estimator"
    )]
    variants: Vec<String>,
    /// Print a progress line every N iterations
    #[arg(long, default_value_t = 10)]
    log_every: usize,
}

#[derive(Args)]
struct DpiArgs {
    /// Destination CSV
    #[arg(long, default_value = "dpi_report.csv")]
    out: PathBuf,
    /// Feature-sampling seeds, one divergence estimate each
    #[arg(long, value_delimiter = ',', default_value = "11,22,33,44,55")]
    seeds: Vec<u64>,
    /// Nearest-neighbor order of the divergence estimator
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Tolerance in nats when comparing the two encodings
    #[arg(long, default_value_t = 0.1)]
    slack: f64,
    #[arg(long, default_value_t = AssetGenConfig::default().n_train)]
    n_train: usize,
    #[arg(long, default_value_t = AssetGenConfig::default().n_test)]
    n_test: usize,
    #[arg(long, default_value_t = AssetGenConfig::default().seed_base_train)]
    seed_base_train: u64,
    #[arg(long, default_value_t = AssetGenConfig::default().seed_base_test)]
    seed_base_test: u64,
    #[arg(long, default_value_t = AssetGenConfig::default().p_ambiguous)]
    p_ambiguous: f64,
}

#[derive(Args)]
struct SaliencyArgs {
    /// Trained checkpoint (gated-estimator variants only)
    #[arg(long)]
    checkpoint: PathBuf,
    /// Output directory for one CSV per object and episode
    #[arg(long)]
    out_dir: PathBuf,
    /// Which asset split to trace
    #[arg(long, default_value = "test")]
    split: String,
    /// Only this object index within the split; all objects when omitted
    #[arg(long)]
    object: Option<usize>,
    /// Episodes per object
    #[arg(long, default_value_t = 1)]
    episodes: usize,
    /// Step cap per episode
    #[arg(long, default_value_t = 300)]
    max_steps: usize,
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::InitConfig(a) => init_config(a),
        Cmd::GenAssets(a) => gen_assets(a),
        Cmd::Train(a) => train(a),
        Cmd::Eval(a) => eval(a),
        Cmd::Ablate(a) => ablate(a),
        Cmd::Dpi(a) => dpi(a),
        Cmd::Saliency(a) => saliency(a),
    }
}

fn load_config(path: Option<&Path>, sets: &[String]) -> Result<ExperimentConfig> {
    let mut cfg = match path {
        Some(p) => ExperimentConfig::load(p)
            .with_context(|| format!("reading config {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    cfg.apply_overrides(sets).context("applying --set overrides")?;
    Ok(cfg)
}

fn parse_variant(s: &str) -> Result<Variant> {
    Ok(match s {
        "full" => Variant::Full,
        "no_handle_shape" => Variant::NoHandleShape,
        "no_sampling" => Variant::NoSampling,
        "mono_estimator" => Variant::MonoEstimator,
        "no_prop_estimator" => Variant::NoPropEstimator,
        other => bail!(
            "unknown variant '{other}' (expected full, no_handle_shape, no_sampling, \
             mono_estimator, or no_prop_estimator)"
        ),
    })
}

fn variant_dir_name(v: Variant) -> &'static str {
    match v {
        Variant::Full => "full",
        Variant::NoHandleShape => "no_handle_shape",
        Variant::NoSampling => "no_sampling",
        Variant::MonoEstimator => "mono_estimator",
        Variant::NoPropEstimator => "no_prop_estimator",
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn init_config(a: InitConfigArgs) -> Result<()> {
    let cfg = load_config(None, &a.sets)?;
    cfg.save(&a.out)
        .with_context(|| format!("writing {}", a.out.display()))?;
    println!("wrote {} (hash {})", a.out.display(), cfg.hash());
    Ok(())
}

fn gen_assets(a: GenAssetsArgs) -> Result<()> {
    let cfg = AssetGenConfig {
        n_train: a.n_train,
        n_test: a.n_test,
        seed_base_train: a.seed_base_train,
        seed_base_test: a.seed_base_test,
        p_ambiguous: a.p_ambiguous,
    };
    let (train, test) = generate_split(&cfg);
    let mut manifest = String::from("split,file,id,kind,class,ambiguous\n");
    for (name, assets) in [("train", &train), ("test", &test)] {
        let dir = a.out_dir.join(name);
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        for asset in assets {
            let file = format!("object_{}.txt", asset.id);
            write_text(&dir.join(&file), &asset.to_text())?;
            manifest.push_str(&format!(
                "{},{}/{},{},{:?},{:?},{}\n",
                name, name, file, asset.id, asset.kind, asset.class, asset.ambiguous
            ));
        }
    }
    write_text(&a.out_dir.join("manifest.csv"), &manifest)?;
    println!(
        "wrote {} train and {} test assets under {}",
        train.len(),
        test.len(),
        a.out_dir.display()
    );
    Ok(())
}

fn print_progress(rec: &artopen::IterationRecord, total: usize) {
    println!(
        "iter {:>5}/{}  reward {:+.3}  lambda {:.3}  kl {:.4}  lr {:.2e}  episodes {}",
        rec.iteration, total, rec.reward_mean, rec.lambda, rec.kl, rec.lr, rec.episodes
    );
}

fn train(a: TrainArgs) -> Result<()> {
    let mut trainer = match &a.resume {
        Some(ckpt) => {
            if a.config.is_some() || !a.sets.is_empty() {
                bail!("--resume continues the checkpoint's stored config; drop --config/--set");
            }
            Trainer::load_checkpoint(ckpt)
                .with_context(|| format!("loading checkpoint {}", ckpt.display()))?
        }
        None => {
            let cfg = load_config(a.config.as_deref(), &a.sets)?;
            Trainer::new(cfg).context("building trainer")?
        }
    };

    fs::create_dir_all(&a.out_dir)
        .with_context(|| format!("creating {}", a.out_dir.display()))?;
    trainer
        .cfg
        .save(&a.out_dir.join("config.toml"))
        .context("writing resolved config")?;

    let metrics_path = a.out_dir.join("metrics.jsonl");
    let mut metrics = fs::OpenOptions::new()
        .create(true)
        .append(a.resume.is_some())
        .truncate(a.resume.is_none())
        .write(true)
        .open(&metrics_path)
        .with_context(|| format!("opening {}", metrics_path.display()))?;

    let total = trainer.cfg.iterations;
    let log_every = a.log_every.max(1);
    while trainer.iteration < total {
        let rec = trainer.train_iteration().context("training iteration")?;
        let line = serde_json::to_string(&rec).context("serializing metrics record")?;
        writeln!(metrics, "{line}")?;
        metrics.flush()?;
        if rec.iteration % log_every == 0 || rec.iteration == total {
            print_progress(&rec, total);
        }
        if let Some(every) = a.checkpoint_every {
            if every > 0 && trainer.iteration % every == 0 && trainer.iteration < total {
                let path = a.out_dir.join(format!("checkpoint_iter{}.json", trainer.iteration));
                trainer.save_checkpoint(&path).context("saving periodic checkpoint")?;
            }
        }
        if trainer.cfg.early_stop_lambda > 0.0 && trainer.lambda >= trainer.cfg.early_stop_lambda {
            println!(
                "early stop at iteration {}: success EMA {:.3} cleared {:.3}",
                trainer.iteration, trainer.lambda, trainer.cfg.early_stop_lambda
            );
            break;
        }
    }

    let ckpt_path = a.out_dir.join("checkpoint.json");
    trainer.save_checkpoint(&ckpt_path).context("saving final checkpoint")?;
    println!(
        "trained to iteration {} ({} episodes, {} successes); checkpoint at {}",
        trainer.iteration,
        trainer.episodes_total,
        trainer.successes_total,
        ckpt_path.display()
    );
    Ok(())
}

fn run_eval(trainer: &Trainer, out_dir: &Path, log_steps: bool) -> Result<EvalReport> {
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let (train_assets, test_assets) = generate_split(&trainer.cfg.assets);

    let mut steps_csv = log_steps
        .then(|| String::from("split,object_id,episode,t,gamma,dir_err,held,xi_norm\n"));
    let mut sink = |r: &EvalStepRecord| {
        if let Some(buf) = steps_csv.as_mut() {
            buf.push_str(&format!(
                "{},{},{},{},{:.6},{:.6},{},{:.6}\n",
                r.split.name(),
                r.object_id,
                r.episode,
                r.t,
                r.gamma,
                r.dir_err,
                r.held,
                r.xi_norm
            ));
        }
    };
    let report = evaluate(trainer, &train_assets, &test_assets, &mut sink);

    write_text(&out_dir.join("eval_summary.csv"), &summary_csv(&report))?;
    write_text(&out_dir.join("eval_per_object.csv"), &per_object_csv(&report))?;
    let json = serde_json::to_string_pretty(&report).context("serializing eval report")?;
    write_text(&out_dir.join("eval_report.json"), &json)?;
    if let Some(buf) = steps_csv {
        write_text(&out_dir.join("eval_steps.csv"), &buf)?;
    }
    Ok(report)
}

fn eval(a: EvalArgs) -> Result<()> {
    let trainer = Trainer::load_checkpoint(&a.checkpoint)
        .with_context(|| format!("loading checkpoint {}", a.checkpoint.display()))?;
    let report = run_eval(&trainer, &a.out_dir, a.steps)?;
    println!(
        "train success {:.3} ({} eps), test success {:.3} ({} eps), generalization {:.3}",
        report.train.success_rate,
        report.train.episodes,
        report.test.success_rate,
        report.test.episodes,
        report.generalization_ratio
    );
    println!("reports under {}", a.out_dir.display());
    Ok(())
}

fn ablate(a: AblateArgs) -> Result<()> {
    let base = load_config(a.config.as_deref(), &a.sets)?;
    let variants = a
        .variants
        .iter()
        .map(|s| parse_variant(s))
        .collect::<Result<Vec<_>>>()?;

    let mut summary = String::from(
        "variant,iterations,episodes,successes,train_success,test_success,generalization_ratio,\
         test_dir_err_entire,test_gamma_before,test_gamma_during\n",
    );
    for variant in variants {
        let mut cfg = base.clone();
        cfg.variant = variant;
        let dir = a.out_dir.join(variant_dir_name(variant));
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        println!("== variant {} ==", variant_dir_name(variant));

        let mut trainer = Trainer::new(cfg).context("building trainer")?;
        trainer.cfg.save(&dir.join("config.toml")).context("writing variant config")?;
        let total = trainer.cfg.iterations;
        let log_every = a.log_every.max(1);
        let records = trainer
            .run(total, |rec| {
                if rec.iteration % log_every == 0 || rec.iteration == total {
                    print_progress(rec, total);
                }
            })
            .context("training variant")?;
        write_text(
            &dir.join("metrics.jsonl"),
            &artopen::experiment::trainer::records_to_jsonl(&records),
        )?;
        trainer.save_checkpoint(&dir.join("checkpoint.json")).context("saving checkpoint")?;

        let report = run_eval(&trainer, &dir, false)?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        summary.push_str(&format!(
            "{},{},{},{},{:.6},{:.6},{:.6},{},{},{}\n",
            variant_dir_name(variant),
            trainer.iteration,
            trainer.episodes_total,
            trainer.successes_total,
            report.train.success_rate,
            report.test.success_rate,
            report.generalization_ratio,
            opt(report.test.dir_err_entire),
            opt(report.test.gamma_before),
            opt(report.test.gamma_during),
        ));
    }
    fs::create_dir_all(&a.out_dir).ok();
    write_text(&a.out_dir.join("ablation_summary.csv"), &summary)?;
    println!("ablation summary at {}", a.out_dir.join("ablation_summary.csv").display());
    Ok(())
}

fn dpi(a: DpiArgs) -> Result<()> {
    if a.seeds.is_empty() {
        bail!("--seeds needs at least one entry");
    }
    let assets = AssetGenConfig {
        n_train: a.n_train,
        n_test: a.n_test,
        seed_base_train: a.seed_base_train,
        seed_base_test: a.seed_base_test,
        p_ambiguous: a.p_ambiguous,
    };
    let report = run_dpi(&assets, &a.seeds, a.k);
    write_text(&a.out, &report.to_csv())?;
    println!(
        "mean divergence: corners {:.4} nats, sampled {:.4} nats ({} seeds, k={})",
        report.mean_kl_corners,
        report.mean_kl_sampled,
        report.rows.len(),
        report.k
    );
    println!(
        "sampled <= corners + {:.2}: {}",
        a.slack,
        if report.passes(a.slack) { "yes" } else { "no" }
    );
    println!("report at {}", a.out.display());
    Ok(())
}

fn saliency(a: SaliencyArgs) -> Result<()> {
    let trainer = Trainer::load_checkpoint(&a.checkpoint)
        .with_context(|| format!("loading checkpoint {}", a.checkpoint.display()))?;
    let (train_assets, test_assets) = generate_split(&trainer.cfg.assets);
    let (tag, assets): (SplitTag, &[ObjectAsset]) = match a.split.as_str() {
        "train" => (SplitTag::Train, &train_assets),
        "test" => (SplitTag::Test, &test_assets),
        other => bail!("unknown split '{other}' (expected train or test)"),
    };
    let chosen: Vec<&ObjectAsset> = match a.object {
        Some(i) => {
            let asset = assets
                .get(i)
                .with_context(|| format!("object index {i} out of range (split has {})", assets.len()))?;
            vec![asset]
        }
        None => assets.iter().collect(),
    };

    fs::create_dir_all(&a.out_dir)
        .with_context(|| format!("creating {}", a.out_dir.display()))?;
    for asset in chosen {
        for ep in 0..a.episodes {
            let report = saliency_episode(&trainer, asset, ep, a.max_steps)
                .with_context(|| format!("tracing object {} episode {ep}", asset.id))?;
            let file = a
                .out_dir
                .join(format!("saliency_{}_{}_ep{}.csv", tag.name(), asset.id, ep));
            write_text(&file, &report.to_csv())?;
            let handle_mass: f64 = report.handle_mass.iter().sum();
            let panel_mass: f64 = report.panel_mass.iter().sum();
            println!(
                "object {} ep {}: {} steps, handle mass {:.3}, panel mass {:.3} -> {}",
                asset.id,
                ep,
                report.steps,
                handle_mass,
                panel_mass,
                file.display()
            );
        }
    }
    Ok(())
}
