//! End-to-end runs of the installed binary over temp directories.

use std::path::Path;
use std::process::Command;

fn artopen() -> Command {
    Command::new(env!("CARGO_BIN_EXE_artopen"))
}

/// Overrides that shrink every budget so a full train/eval cycle is cheap.
fn tiny_sets(cmd: &mut Command) {
    for kv in [
        "seed=7",
        "n_envs=2",
        "rollout_len=4",
        "iterations=3",
        "latent_dim=4",
        "enc_hidden=[16]",
        "dec_hidden=[16]",
        "ppo.actor_hidden=[16,8]",
        "ppo.critic_hidden=[16,8]",
        "artiest.ext_hidden=[16]",
        "artiest.prop_hidden=[16]",
        "artiest.gate_hidden=[8]",
        "assets.n_train=3",
        "assets.n_test=2",
        "sim.horizon=8",
        "eval_episodes_per_object=1",
        "eval_horizon=8",
    ] {
        cmd.arg("--set").arg(kv);
    }
}

fn run_ok(cmd: &mut Command) -> String {
    let out = cmd.output().expect("spawning binary");
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf8 stdout")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}

#[test]
fn init_config_applies_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.toml");
    run_ok(artopen()
        .arg("init-config")
        .arg("--out")
        .arg(&cfg)
        .args(["--set", "ppo.clip=0.25", "--set", "variant=no_sampling"]));
    let text = read(&cfg);
    assert!(text.contains("clip = 0.25"), "override missing:\n{text}");
    assert!(text.contains("variant = \"no_sampling\""), "variant missing:\n{text}");

    // Bad paths and bad values fail loudly instead of being dropped.
    let bad = artopen()
        .arg("init-config")
        .arg("--out")
        .arg(dir.path().join("x.toml"))
        .args(["--set", "ppo.does_not_exist=1"])
        .output()
        .unwrap();
    assert!(!bad.status.success());
}

#[test]
fn gen_assets_writes_split_files_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(artopen()
        .arg("gen-assets")
        .arg("--out-dir")
        .arg(dir.path())
        .args(["--n-train", "4", "--n-test", "2"]));

    let manifest = read(&dir.path().join("manifest.csv"));
    assert_eq!(manifest.lines().count(), 1 + 4 + 2, "manifest rows:\n{manifest}");
    let train_files: Vec<_> = std::fs::read_dir(dir.path().join("train")).unwrap().collect();
    assert_eq!(train_files.len(), 4);

    // Asset files round-trip through the text format.
    let first = read(&dir.path().join("train").join("object_1000.txt"));
    let parsed = artopen::ObjectAsset::from_text(&first).expect("asset parses");
    assert_eq!(parsed.id, 1000);
}

#[test]
fn train_eval_saliency_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");

    let mut cmd = artopen();
    cmd.arg("train")
        .arg("--out-dir")
        .arg(&run)
        .args(["--checkpoint-every", "2", "--log-every", "1"]);
    tiny_sets(&mut cmd);
    run_ok(&mut cmd);

    assert!(run.join("config.toml").exists());
    assert!(run.join("checkpoint.json").exists());
    assert!(run.join("checkpoint_iter2.json").exists());
    let metrics = read(&run.join("metrics.jsonl"));
    assert_eq!(metrics.lines().count(), 3, "one record per iteration:\n{metrics}");
    for line in metrics.lines() {
        let v: serde_json::Value = serde_json::from_str(line).expect("metrics line is JSON");
        assert!(v.get("reward_mean").is_some());
    }

    // Resuming the midpoint checkpoint reproduces the straight run exactly.
    let resumed = dir.path().join("resumed");
    run_ok(artopen()
        .arg("train")
        .arg("--out-dir")
        .arg(&resumed)
        .arg("--resume")
        .arg(run.join("checkpoint_iter2.json")));
    assert_eq!(
        read(&run.join("checkpoint.json")),
        read(&resumed.join("checkpoint.json")),
        "resumed checkpoint bytes diverged"
    );
    assert_eq!(
        metrics.lines().last().unwrap(),
        read(&resumed.join("metrics.jsonl")).trim_end(),
        "resumed final metrics record diverged"
    );

    // Resume refuses conflicting configuration flags.
    let conflict = artopen()
        .arg("train")
        .arg("--out-dir")
        .arg(dir.path().join("x"))
        .arg("--resume")
        .arg(run.join("checkpoint.json"))
        .args(["--set", "seed=9"])
        .output()
        .unwrap();
    assert!(!conflict.status.success());

    let eval_dir = run.join("eval");
    run_ok(artopen()
        .arg("eval")
        .arg("--checkpoint")
        .arg(run.join("checkpoint.json"))
        .arg("--out-dir")
        .arg(&eval_dir)
        .arg("--steps"));
    let summary = read(&eval_dir.join("eval_summary.csv"));
    assert!(summary.starts_with("config_hash,variant,iteration,split"));
    assert_eq!(summary.lines().count(), 3, "header + one row per split:\n{summary}");
    let steps = read(&eval_dir.join("eval_steps.csv"));
    // 3 train objects + 2 test objects, 1 episode each, horizon 8.
    assert_eq!(steps.lines().count(), 1 + 5 * 8, "step rows:\n{steps}");
    assert!(eval_dir.join("eval_per_object.csv").exists());
    assert!(eval_dir.join("eval_report.json").exists());

    let sal_dir = run.join("sal");
    run_ok(artopen()
        .arg("saliency")
        .arg("--checkpoint")
        .arg(run.join("checkpoint.json"))
        .arg("--out-dir")
        .arg(&sal_dir)
        .args(["--split", "test", "--object", "0", "--max-steps", "6"]));
    let sal = read(&sal_dir.join("saliency_test_2000_ep0.csv"));
    assert!(sal.starts_with("cuboid,point,x,y,z,mass,share"));
    // 8 handle points + 8 panel points.
    assert_eq!(sal.lines().count(), 1 + 16, "saliency rows:\n{sal}");
}

#[test]
fn ablate_writes_variant_dirs_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let mut cmd = artopen();
    cmd.arg("ablate")
        .arg("--out-dir")
        .arg(dir.path())
        .args(["--variants", "full,no_prop_estimator", "--log-every", "5"]);
    tiny_sets(&mut cmd);
    // Two full train cycles: keep them to two iterations.
    cmd.args(["--set", "iterations=2"]);
    run_ok(&mut cmd);

    let summary = read(&dir.path().join("ablation_summary.csv"));
    assert_eq!(summary.lines().count(), 3, "header + two variants:\n{summary}");
    assert!(summary.contains("\nfull,"));
    assert!(summary.contains("\nno_prop_estimator,"));
    for variant in ["full", "no_prop_estimator"] {
        let sub = dir.path().join(variant);
        assert!(sub.join("checkpoint.json").exists());
        assert!(sub.join("metrics.jsonl").exists());
        assert!(sub.join("eval_summary.csv").exists());
    }
}

#[test]
fn dpi_report_has_row_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("dpi.csv");
    let stdout = run_ok(artopen()
        .arg("dpi")
        .arg("--out")
        .arg(&out)
        .args(["--seeds", "11,22", "--n-train", "8", "--n-test", "4"]));
    assert!(stdout.contains("mean divergence"));
    let csv = read(&out);
    assert_eq!(csv.lines().count(), 1 + 2 + 1, "header + seeds + mean:\n{csv}");
    assert!(csv.lines().last().unwrap().starts_with("mean,"));
}
