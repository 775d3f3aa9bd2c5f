use std::path::Path;
use std::process::{Command, Output};

fn noiseblow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_noiseblow"))
        .args(args)
        .env_remove("NOISEBLOW_WORKERS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn passing_run_exits_zero_and_writes_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "experiment = \"rate\"\n");
    let out = tmp.path().join("out");
    let o = noiseblow(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["results.csv", "summary.json", "rate_sweep.dat"] {
        let text = std::fs::read_to_string(out.join(f)).unwrap();
        assert!(text.starts_with("# config_hash=") || f == "summary.json", "{f}");
        assert!(!text.contains('\r'));
    }
    let r = noiseblow(&["report", "--out", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&r.stdout).contains("PASS"));
}

#[test]
fn failing_verdict_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    // A zero-variance mismatch at a point where the event is almost sure.
    let cfg = write_config(tmp.path(), "experiment = \"exp_event\"\nestimator.t = [0.5]\nestimator.n_paths = 1000\n");
    let out = tmp.path().join("out");
    let o = noiseblow(&["simulate-multiplicative", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stdout));
    let r = noiseblow(&["report", "--out", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn configuration_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let out = out.to_str().unwrap();
    let cfg = write_config(tmp.path(), "experiment = \"positivity\"\nmodel.sigma = -1\n");
    let o = noiseblow(&["analytic", "--config", &cfg, "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sigma"));

    let o = noiseblow(&["analytic", "--override", "experiment=positivity", "--override", "model.sgima=1", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("model.sgima"));

    let o = noiseblow(&["simulate-multiplicative", "--override", "experiment=exp_event", "--override", "model.p=3", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).to_lowercase().contains("regime"));

    let o = noiseblow(&["blowup-time", "--override", "experiment=rate", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!Path::new(out).exists(), "nothing is written before validation");
}

#[test]
fn unwritable_output_fails_before_computation() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    std::fs::write(&blocker, b"").unwrap();
    let out = blocker.join("sub");
    let o = noiseblow(&["sweep", "--override", "experiment=rate", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot access"));
}

#[test]
fn seed_flag_overrides_file_and_changes_estimates() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "experiment = \"positivity\"\nestimator.n_paths = 2000\nseed = 1\n");
    let run = |seed: &str, dir: &str| {
        let out = tmp.path().join(dir);
        let o = noiseblow(&["simulate-additive", "--config", &cfg, "--seed", seed, "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
        std::fs::read_to_string(out.join("results.csv")).unwrap()
    };
    let a = run("7", "a");
    let b = run("8", "b");
    assert!(a.contains("master_seed=7"));
    assert_ne!(a.lines().nth(2), b.lines().nth(2));
    // The hash covers the model, not the seed.
    assert_eq!(a.lines().next().unwrap().split(' ').nth(1), b.lines().next().unwrap().split(' ').nth(1));
}
