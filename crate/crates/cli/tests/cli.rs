use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn drgossip(args: &[&str], out_root: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drgossip"))
        .args(args)
        .env("DRGOSSIP_OUTPUT_ROOT", out_root)
        .output()
        .expect("binary runs")
}

const SMALL: &str = "\
name = small
algo = adgda
topology.kind = ring
topology.nodes = 4
compression = quant:8
data.features = 3
data.samples_per_node = 30
data.test_per_node = 30
hyper.rounds = 20
hyper.batch = 4
cadence = 5
seeds = 1,2,3
";

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("cfg.txt");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn version_prints() {
    let tmp = tempfile::tempdir().unwrap();
    let out = drgossip(&["version"], tmp.path());
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("drgossip "));
}

#[test]
fn run_writes_artifacts_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let root = tmp.path().join("out");
    let out = drgossip(&["run", "--config", &cfg], &root);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let dir = root.join("small");
    for f in [
        "seed_1.csv",
        "seed_2.csv",
        "seed_3.csv",
        "summary.csv",
        "metadata.txt",
        "config.txt",
    ] {
        assert!(dir.join(f).exists(), "missing {f}");
    }
    let first = fs::read(dir.join("seed_2.csv")).unwrap();
    let out = drgossip(&["run", "--config", &cfg], &root);
    assert!(out.status.success());
    assert_eq!(first, fs::read(dir.join("seed_2.csv")).unwrap());

    // summary numbers are recomputable from the CSVs
    let recomputed = drgossip_core::harness::summary_from_dir(&dir).unwrap();
    let text = fs::read_to_string(dir.join("summary.csv")).unwrap();
    assert_eq!(text, drgossip_core::harness::run::summary_csv(&recomputed));
    let meta = fs::read_to_string(dir.join("metadata.txt")).unwrap();
    for key in ["gamma =", "rho =", "beta =", "delta =", "c =", "version ="] {
        assert!(meta.contains(key), "metadata lacks {key}");
    }
}

#[test]
fn overrides_take_effect() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let root = tmp.path().join("out");
    let out = drgossip(
        &[
            "run",
            "--config",
            &cfg,
            "--seeds=4",
            "--alpha=0.01",
            "name=single",
        ],
        &root,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let dir = root.join("single");
    assert!(dir.join("seed_4.csv").exists());
    assert!(!dir.join("seed_1.csv").exists());
    assert!(fs::read_to_string(dir.join("config.txt"))
        .unwrap()
        .contains("hyper.alpha = 0.01"));
    assert!(fs::read_to_string(dir.join("summary.csv"))
        .unwrap()
        .contains(",1,true"));
}

#[test]
fn sweep_writes_comparison() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let root = tmp.path().join("out");
    let out = drgossip(
        &[
            "sweep",
            "--config",
            &cfg,
            "--axis",
            "alpha",
            "--values",
            "0.01,1,10",
            "seeds=1",
        ],
        &root,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let table = fs::read_to_string(root.join("small/comparison.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
    assert!(table.starts_with("alpha,worst_acc_mean"));
    assert!(root.join("small/alpha_0.01/seed_1.csv").exists());
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().join("out");
    let bad = write_config(
        tmp.path(),
        "algo = adgda\ntopology.kind = torus2d\ntopology.nodes = 10\ncompression = identity\n",
    );
    assert_eq!(
        drgossip(&["run", "--config", &bad], &root).status.code(),
        Some(2)
    );
    let good = write_config(tmp.path(), SMALL);
    assert_eq!(
        drgossip(&["run", "--config", &good, "--bogus=1"], &root)
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        drgossip(
            &["sweep", "--config", &good, "--axis", "alpha", "--values", ""],
            &root
        )
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        drgossip(
            &["sweep", "--config", &good, "--axis", "beta", "--values", "1"],
            &root
        )
        .status
        .code(),
        Some(2)
    );
    let missing = tmp.path().join("nope.txt");
    assert_eq!(
        drgossip(&["run", "--config", missing.to_str().unwrap()], &root)
            .status
            .code(),
        Some(3)
    );
    let diverge = write_config(
        tmp.path(),
        &format!("{SMALL}hyper.eta_theta = 1e300\nhyper.schedule = constant\ngamma = 1\n"),
    );
    let out = drgossip(&["run", "--config", &diverge], &root);
    assert_eq!(
        out.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(root.join("small/seed_1.diverged").exists());
}

#[test]
fn check_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = drgossip(&["check"], tmp.path());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    assert!(stdout.contains("PASS projection"));
    assert!(!stdout.contains("FAIL"));
}
