use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "\
# tiny scenario
trials = 3
eval.times = 0.5, 1
sweep.n = 16, 32, 64
problem.nonlinearity = sine
problem.nonlinearity.scale = 0.5
problem.initial.modes = 1:1, 2:0.3
noise.sigma = 0.05
params.cap = 8
grid.steps = 10
truth.cap = 8
truth.refine = 2
";

fn fracback(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracback"))
        .args(args)
        .current_dir(dir)
        .env_remove("FRACBACK_SEED")
        .output()
        .expect("binary runs")
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.conf"), SMALL).unwrap();
    dir
}

#[test]
fn mise_is_reproducible_for_a_fixed_seed() {
    let dir = setup();
    let run = |out: &str| {
        let o = fracback(&["mise", "--config", "small.conf", "--trials", "1", "--seed", "7", "--out", out], dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(dir.path().join(out).join("mise.csv")).unwrap()
    };
    let a = run("a");
    assert_eq!(a, run("b"));
    assert!(String::from_utf8(a).unwrap().starts_with("n,M_n,t,metric,mise,stderr,bound\n"));
}

#[test]
fn missing_config_prints_schema_and_exits_1() {
    let dir = setup();
    let o = fracback(&["mise"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("--config"));
    assert!(err.contains("noise.sigma"));
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = setup();
    fs::write(dir.path().join("bad.conf"), "noise.sigmaa = 0.1\n").unwrap();
    let o = fracback(&["forward", "--config", "bad.conf"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_writes_the_rate_table() {
    let dir = setup();
    let o = fracback(&["sweep", "--config", "small.conf", "--out", "s"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("s/sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,M_n,t,mise,stderr,bound,slope"));
    assert_eq!(lines.count(), 6);
}

#[test]
fn flag_seed_overrides_environment() {
    let dir = setup();
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_fracback"));
        cmd.args(["forward", "--config", "small.conf", "--out", "f"]).current_dir(dir.path()).env_remove("FRACBACK_SEED");
        if let Some(s) = env {
            cmd.env("FRACBACK_SEED", s);
        }
        if let Some(s) = flag {
            cmd.args(["--seed", s]);
        }
        assert!(cmd.output().unwrap().status.success());
        let text = fs::read_to_string(dir.path().join("f/observed_trial0.csv")).unwrap();
        text.lines().next().unwrap().split_whitespace().nth(1).unwrap().to_string()
    };
    assert_eq!(run(Some("5"), None), "seed=5");
    assert_eq!(run(Some("5"), Some("9")), "seed=9");
}

#[test]
fn forward_and_regularize_write_outputs() {
    let dir = setup();
    for (cmd, file) in [("forward", "trajectory.csv"), ("forward", "assumptions.json"), ("regularize", "trial.json")] {
        let o = fracback(&[cmd, "--config", "small.conf", "--out", "o"], dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(dir.path().join("o").join(file).exists(), "{file}");
    }
}

#[test]
fn check_suite_exits_0() {
    let dir = setup();
    let o = fracback(&["check"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(!String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}
