use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn vqcfd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vqcfd"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("exp.toml");
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

const SMALL: &str = r#"
name = "small"
seed = 3
mode = "noiseless"
executions = 2
shots = 2000
[problem]
n = 2
g = 10.0
v0 = 100.0
[ansatz]
kind = "real_amplitude"
layers = 1
[optimizer]
max_iterations = 30
"#;

#[test]
fn run_writes_outputs_and_replays_from_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("a");
    let o = vqcfd(&["run", &cfg, "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["traces.jsonl", "summary.csv", "summary.json", "manifest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let csv = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(csv.starts_with("run,iteration,E_vqcfd,E_direct,delta,"));

    let replay = dir.path().join("b");
    let manifest = out.join("manifest.json");
    let o = vqcfd(&["run", manifest.to_str().unwrap(), "-o", replay.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(csv, fs::read_to_string(replay.join("summary.csv")).unwrap());
}

#[test]
fn seed_override_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("o");
    let o = vqcfd(&["run", &cfg, "-o", out.to_str().unwrap(), "--seed", "99"]);
    assert!(o.status.success());
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 99);
    assert_eq!(m["config"]["seed"], 99);
}

#[test]
fn schema_error_exits_2_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("executions = 2", "executions = 0"));
    let o = vqcfd(&["run", &cfg, "-o", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("executions"));

    let cfg = write_config(dir.path(), &SMALL.replace("layers = 1", "layers = 1\ndepth = 3"));
    let o = vqcfd(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn runtime_error_exits_3_and_keeps_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}[reference]\ntau = 1.0\n"));
    let out = dir.path().join("o");
    let o = vqcfd(&["run", &cfg, "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert!(m["failure"].as_str().unwrap().contains("tau"));
}

#[test]
fn ground_state_prints_energy_and_writes_vector() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &SMALL.replace("n = 2", "n = 4").replace("g = 10.0", "g = 500.0").replace("layers = 1", "layers = 2"),
    );
    let out = dir.path().join("gs");
    let o = vqcfd(&["ground-state", &cfg, "-o", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("E_GS = "));
    let csv = fs::read_to_string(out.join("ground_state.csv")).unwrap();
    assert_eq!(csv.lines().count(), 17);
}

#[test]
fn encode_potential_reports_exact_quadratic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("n = 2", "n = 4").replace("layers = 1", "layers = 2"));
    let out = dir.path().join("enc");
    let o = vqcfd(&["encode-potential", &cfg, "-o", out.to_str().unwrap()]);
    assert!(o.status.success());
    let err = fs::read_to_string(out.join("error_vs_kappa.csv")).unwrap();
    let kappa2: Vec<&str> = err.lines().nth(2).unwrap().split(',').collect();
    assert_eq!(kappa2[0], "2");
    assert!(kappa2[2].parse::<f64>().unwrap() < 1e-12);
    assert!(out.join("circuit.txt").exists());
}

#[test]
fn transpile_report_and_noise_validate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}[noise]\ncalibration = \"bundled:kolkata-like\"\n"));
    let out = dir.path().join("tr");
    let o = vqcfd(&["transpile-report", &cfg, "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("transpile_report.json").exists());

    let o = vqcfd(&["noise-validate", "bundled:kolkata-like"]);
    assert!(o.status.success());
    let o = vqcfd(&["noise-validate", "bundled:nowhere"]);
    assert_eq!(o.status.code(), Some(2));
}
