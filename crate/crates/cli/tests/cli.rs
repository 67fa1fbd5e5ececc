use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str], config: &str) -> Output {
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    Command::new(env!("CARGO_BIN_EXE_pmlab"))
        .args(args)
        .args(["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const DYNAMICS: &str = "springs = 64\ninitial = \"cos(1) + step(0.5)\"\ntau = 1e-5\nhorizon = 1e-3\n";

#[test]
fn unknown_key_exits_one_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["statics"], "eps = 0.01\nlamda = 1.0\n");
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2") && stderr(&o).contains("lamda"), "{}", stderr(&o));
}

#[test]
fn unknown_experiment_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["sweep"], "experiment = \"elasticity\"\nsweep_axis = \"eps\"\nsweep_values = [0.01]\n");
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("experiment"), "{}", stderr(&o));
    let o = Command::new(env!("CARGO_BIN_EXE_pmlab")).args(["elasticity", "--config", "x.toml"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn missing_and_invalid_values_name_their_key() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["dynamics"], "springs = 64\ninitial = \"cos(1)\"\nhorizon = 1e-3\n");
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`tau`"), "{}", stderr(&o));
    let o = run(dir.path(), &["dynamics"], "springs = 64\ninitial = \"cos(1) + \"\ntau = 1e-5\nhorizon = 1e-3\n");
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`initial`"), "{}", stderr(&o));
}

#[test]
fn unstable_step_exits_two_unless_allowed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = DYNAMICS.replace("tau = 1e-5", "tau = 1e-4");
    let o = run(dir.path(), &["dynamics"], &cfg);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("stability condition"), "{}", stderr(&o));

    let o = run(dir.path(), &["dynamics", "--allow-unstable"], &cfg);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["derived"]["tainted"], true);
}

#[test]
fn outputs_use_fixed_float_format() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["dynamics"], &format!("{DYNAMICS}dump_stride = 50\n"));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("out/trace.csv")).unwrap();
    assert!(!text.contains('\r'));
    let first = text.lines().nth(1).unwrap();
    assert_eq!(first.split(',').nth(1), Some("0.0000000000000000e0"));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["experiment"], "dynamics");
    assert!(manifest["config"].get("lambda").is_none());
    let dumps = std::fs::read_dir(dir.path().join("out/dumps")).unwrap().count();
    assert_eq!(dumps, 3);
}

#[test]
fn config_for_another_experiment_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["statics"], &format!("experiment = \"dynamics\"\n{DYNAMICS}"));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn empty_sweep_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["sweep"], &format!("experiment = \"dynamics\"\n{DYNAMICS}sweep_axis = \"tau\"\nsweep_values = []\n"));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("sweep_values"), "{}", stderr(&o));
}

#[test]
fn failed_sweep_points_keep_the_others() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("experiment = \"dynamics\"\n{DYNAMICS}sweep_axis = \"tau\"\nsweep_values = [1e-5, 1e-3]\n");
    let o = run(dir.path(), &["sweep", "--jobs", "2"], &cfg);
    assert_eq!(o.status.code(), Some(2));
    let agg = std::fs::read_to_string(dir.path().join("out/aggregate.csv")).unwrap();
    let rows: Vec<&str> = agg.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].contains(",ok,") && rows[2].contains(",error,"), "{agg}");
    assert!(dir.path().join("out/point_000/trace.csv").exists());
}
