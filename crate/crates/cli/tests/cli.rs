use std::path::Path;
use std::process::{Command, Output};

use vvlab_cli::RunConfig;

fn vvlab(dir: &Path, args: &[&str], config: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_vvlab"));
    cmd.args(args).arg("--output").arg(dir.join("out"));
    if let Some(text) = config {
        let path = dir.join("run.toml");
        std::fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.output().unwrap()
}

fn manifest(dir: &Path, name: &str) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join("out").join(format!("{name}_manifest.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn default_config_round_trips() {
    let c = RunConfig::default();
    let text = c.to_toml().unwrap();
    assert_eq!(RunConfig::parse(&text).unwrap(), c);
}

#[test]
fn edited_config_round_trips() {
    let text = r#"
[run]
name = "edited"
seed = 42

[model]
gamma = 1.4
delta = 3.0
beta = -0.6000000000000001
constants = "tight"

[velocity]
kind = "affine"
matrix = [1.0, 0.1, -0.1, 0.5]
shift = [0.0, 0.25]
perturbation = "sin-bump"
amplitude = 0.1

[density]
kind = "inverse-power"
sigma = 4.1
truncation = 3.5

[grid]
dim = 2
cells = 48
boundary = "periodic-test"

[solver]
variant = "laplacian"
dt = 0.001
iota = 1.8

[sweep]
ladder = [0.01, 0.005, 0.0025]
sample_times = [0.1, 0.2]

[ode]
c2 = 0.3

[report]
inputs = ["a_manifest.json"]
"#;
    let c = RunConfig::parse(text).unwrap();
    assert_eq!(c.run.seed, 42);
    assert_eq!(c.solver.dt, Some(0.001));
    assert_eq!(c.grid.cells, 48);
    let again = RunConfig::parse(&c.to_toml().unwrap()).unwrap();
    assert_eq!(again, c);
    assert_eq!(again.hash().unwrap(), c.hash().unwrap());
}

#[test]
fn unknown_keys_rejected() {
    assert!(RunConfig::parse("[model]\ngama = 2.0\n").is_err());
    assert!(RunConfig::parse("[modle]\n").is_err());
}

#[test]
fn hash_tracks_content() {
    let a = RunConfig::default();
    let mut b = a.clone();
    b.model.alpha = 2.0;
    assert_ne!(a.hash().unwrap(), b.hash().unwrap());
    assert_eq!(a.hash().unwrap().len(), 64);
}

#[test]
fn constants_for_equal_exponents() {
    let dir = tempfile::tempdir().unwrap();
    let out = vvlab(dir.path(), &["constants"], Some("[model]\ngamma = 2.0\ndelta = 2.0\nalpha = 1.0\nbeta = 0.0\n"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(dir.path(), "constants");
    assert_eq!(m["result"]["constants"]["m1"].as_f64().unwrap(), 1.0);
    assert_eq!(m["result"]["conditions"]["satisfied"], serde_json::json!(["P4"]));
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn empty_ladder_is_config_error_without_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = vvlab(dir.path(), &["sweep"], Some("[sweep]\nladder = []\n"));
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn malformed_config_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = vvlab(dir.path(), &["constants"], Some("[model\n"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn precondition_exit_code() {
    // Contracting data violates the spectral condition.
    let dir = tempfile::tempdir().unwrap();
    let out = vvlab(dir.path(), &["background"], Some("[velocity]\nrate = -1.0\n"));
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn fit_failure_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[grid]\ncells = 64\n[solver]\nt_end = 0.1\nenergy_samples = 3\n";
    let out = vvlab(dir.path(), &["simulate"], Some(cfg));
    assert_eq!(out.status.code(), Some(5));
    assert_eq!(manifest(dir.path(), "simulate")["status"], "fit-failed");
    assert!(dir.path().join("out/energy.csv").exists());
}

#[test]
fn blow_up_exit_code() {
    // A fixed step far above the CFL limit.
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[grid]\ncells = 64\n[solver]\nt_end = 1.0\ndt = 0.5\n";
    let out = vvlab(dir.path(), &["simulate"], Some(cfg));
    assert!(matches!(out.status.code(), Some(3) | Some(4)), "{:?}", out.status);
}

#[test]
fn ode_homogeneous_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[ode]\nb = 2.0\nc1 = 0.0\nc2 = 0.0\nz0 = 1.0\nt_end = 5.0\ndt = 0.01\n";
    let out = vvlab(dir.path(), &["ode"], Some(cfg));
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("out/ode.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,z_closed,z_numeric"));
    let mut n = 0;
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert!((v[1] - (1.0 + v[0]).powi(-2)).abs() < 1e-14);
        assert!((v[2] - (1.0 + v[0]).powi(-2)).abs() < 1e-8);
        n += 1;
    }
    assert_eq!(n, 501);
    assert_eq!(manifest(dir.path(), "ode")["result"]["lambda"], "inf");
}

#[test]
fn simulate_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[grid]\ncells = 128\n[solver]\nt_end = 0.5\n";
    assert!(vvlab(dir.path(), &["simulate"], Some(cfg)).status.success());
    assert!(vvlab(dir.path(), &["euler"], Some(cfg)).status.success());
    assert!(vvlab(dir.path(), &["report"], Some(cfg)).status.success());
    let report = std::fs::read_to_string(dir.path().join("out/report.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&report).unwrap();
    let merged = v["manifests"].as_object().unwrap();
    assert_eq!(merged.len(), 2);
    assert_eq!(manifest(dir.path(), "euler")["result"]["epsilon"], 0.0);
    assert_eq!(manifest(dir.path(), "simulate")["qualitative_mode"], true);
    let state = std::fs::read_to_string(dir.path().join("out/final_state.csv")).unwrap();
    assert_eq!(state.lines().next(), Some("x1,rho,u1"));
    assert_eq!(state.lines().count(), 129);
}

#[test]
fn report_without_manifests_fails() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(vvlab(dir.path(), &["report"], None).status.code(), Some(3));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("env-out");
    let out = Command::new(env!("CARGO_BIN_EXE_vvlab")).arg("constants").env(vvlab_cli::OUTPUT_ENV, &target).output().unwrap();
    assert!(out.status.success());
    assert!(target.join("constants_manifest.json").exists());
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: &str| {
        let out = vvlab(dir.path(), &["background", "--seed", seed], Some("[velocity]\npoints = 5\ntime_samples = 2\n"));
        assert!(out.status.success());
        (std::fs::read_to_string(dir.path().join("out/background.csv")).unwrap(), manifest(dir.path(), "background"))
    };
    let (a, ma) = run("1");
    let (b, mb) = run("2");
    let (c, _) = run("1");
    assert_ne!(a, b);
    assert_eq!(a, c);
    assert_eq!(ma["seed"], 1);
    assert_ne!(ma["config_hash"], mb["config_hash"]);
}

#[test]
fn repeated_sweeps_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[grid]\ncells = 64\n[density]\namplitude = 0.01\nsigma = 6.5\n[sweep]\nt_end = 0.25\nladder = [0.01, 0.005, 0.0025]\n";
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let out = vvlab(dir.path(), &["sweep"], Some(cfg));
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(std::fs::read(dir.path().join("out/sweep.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}
