use std::path::Path;
use std::process::Command;

use balflow::output::CsvSink;
use balflow::{ExperimentConfig, HarnessError};
use balflow_core::TraceSink;

const SMALL_SPHERE: &str = r#"
seed = 3
k = [3, 5]

[geometry]
kind = "sphere"
n_theta = 12
n_phi = 24

[omega]
family = "one-plus-cos"
a = 0.3

[balancing]
dt = 0.05
dt_max = 0.3
"#;

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn balanced_pipeline_writes_traces_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::parse(SMALL_SPHERE).unwrap();
    let report = balflow::run_balanced(&cfg, tmp.path(), 2).unwrap();
    assert_eq!(report.runs.iter().map(|r| r.k).collect::<Vec<_>>(), vec![3, 5]);
    for r in &report.runs {
        assert!(r.flow_converged);
        assert!(r.agreement_distance < 1e-8);
        assert!(r.start_spread < 1e-8);
    }
    let flow = csv_rows(&tmp.path().join("flow_k5.csv"));
    assert_eq!(flow.len(), report.runs[1].flow_steps + 1);
    let ts: Vec<f64> = flow.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(ts.windows(2).all(|w| w[1] > w[0]));

    let m = manifest(tmp.path());
    assert_eq!(m["schema_version"], 1);
    assert_eq!(m["command"], "balanced");
    assert_eq!(m["status"], "ok");
    assert_eq!(m["config_hash"], cfg.hash());
    assert_eq!(m["seed"], 3);
    assert_eq!(m["summary"]["runs"][0]["k"], 3);
    let names: Vec<&str> = m["files"].as_array().unwrap().iter().map(|f| f["name"].as_str().unwrap()).collect();
    for n in ["tk_k3.csv", "tk_seeded_k3.csv", "flow_k3.csv", "fs_density_k3.csv", "balanced_k3.csv", "flow_k5.csv"] {
        assert!(names.contains(&n), "{n} missing from {names:?}");
        assert!(tmp.path().join(n).exists());
    }
}

#[test]
fn reference_volume_gives_trivial_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::parse(&SMALL_SPHERE.replace("a = 0.3", "a = 0.0")).unwrap();
    let report = balflow::run_balanced(&cfg, &tmp.path().join("b"), 1).unwrap();
    for r in &report.runs {
        assert_eq!(r.tk_iterations, 0);
        assert_eq!(r.flow_steps, 0);
        assert!(r.density_ratio_error < 1e-10);
        assert_eq!(csv_rows(&tmp.path().join(format!("b/flow_k{}.csv", r.k))).len(), 1);
    }
    let asym = balflow::run_bergman_asymptotics(&cfg, &tmp.path().join("a"), 1).unwrap();
    assert!(asym.runs.iter().all(|r| r.beta_error < 1e-12));
}

#[test]
fn seeded_start_follows_the_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::parse(SMALL_SPHERE).unwrap();
    cfg.k = vec![4];
    balflow::run_balanced(&cfg, &tmp.path().join("a"), 1).unwrap();
    balflow::run_balanced(&cfg, &tmp.path().join("b"), 1).unwrap();
    cfg.seed = 4;
    balflow::run_balanced(&cfg, &tmp.path().join("c"), 1).unwrap();
    let read = |d: &str, f: &str| std::fs::read(tmp.path().join(d).join(f)).unwrap();
    assert_eq!(read("a", "tk_seeded_k4.csv"), read("b", "tk_seeded_k4.csv"));
    assert_ne!(read("a", "tk_seeded_k4.csv"), read("c", "tk_seeded_k4.csv"));
    assert_eq!(read("a", "flow_k4.csv"), read("c", "flow_k4.csv"));
}

#[test]
fn thread_count_does_not_change_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::parse(SMALL_SPHERE).unwrap();
    balflow::run_balanced(&cfg, &tmp.path().join("one"), 1).unwrap();
    balflow::run_balanced(&cfg, &tmp.path().join("four"), 4).unwrap();
    for f in ["flow_k3.csv", "flow_k5.csv", "tk_k5.csv", "balanced_k5.csv"] {
        assert_eq!(std::fs::read(tmp.path().join("one").join(f)).unwrap(), std::fs::read(tmp.path().join("four").join(f)).unwrap());
    }
}

#[test]
fn failed_run_keeps_its_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!("{SMALL_SPHERE}max_steps = 4\n");
    let cfg = ExperimentConfig::parse(&text).unwrap();
    let err = balflow::run_balanced(&cfg, tmp.path(), 1).unwrap_err();
    assert!(matches!(err, HarnessError::Numerical(balflow_core::Error::NotConverged { .. })));
    assert_eq!(err.exit_code(), 3);
    assert_eq!(csv_rows(&tmp.path().join("flow_k3.csv")).len(), 5);
    let m = manifest(tmp.path());
    assert_eq!(m["status"], "failed");
    assert!(m["error"].as_str().unwrap().contains("no convergence"));
}

#[test]
fn csv_sink_enforces_the_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("t.csv");
    let mut sink = CsvSink::create(&path).unwrap();
    assert!(sink.begin(&["x", "y"]).is_err());
    sink.begin(&["t", "y"]).unwrap();
    sink.record(&[0.0, 1.5]).unwrap();
    assert!(sink.record(&[0.0, 2.0]).is_err());
    assert!(sink.record(&[1.0]).is_err());
    sink.record(&[0.25, 1e-300]).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "t,y\n0,1.5\n0.25,1e-300\n");
}

#[test]
fn small_torus_calabi_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::parse(
        "[geometry]\nkind = \"torus\"\nn_x = 16\nn_y = 16\n[omega]\nfamily = \"exp-sin-cos\"\na = 0.2\nb = 0.1\n",
    )
    .unwrap();
    let r = balflow::run_calabi(&cfg, tmp.path(), 1).unwrap();
    assert!(r.converged);
    assert!(r.ma_residual < 1e-8);
    assert_eq!(r.max_principle_excess, 0.0);
    assert!(r.endgame.is_empty());
    assert_eq!(csv_rows(&tmp.path().join("pde.csv")).len(), r.steps + 1);
    assert_eq!(csv_rows(&tmp.path().join("phi.csv")).len(), 256);
}

#[test]
fn sections_commands_reject_the_torus() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::parse(
        "k = [4]\n[geometry]\nkind = \"torus\"\nn_x = 16\nn_y = 16\n[omega]\nfamily = \"exp-sin-cos\"\na = 0.2\nb = 0.1\n",
    )
    .unwrap();
    match balflow::run_quantization(&cfg, tmp.path(), 1) {
        Err(HarnessError::Config { key, .. }) => assert_eq!(key, "geometry.kind"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn quantization_pipeline_reports_each_k() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL_SPHERE.replace("dt = 0.05\ndt_max = 0.3", "dt = 0.01\ndt_max = 0.01\ndt_growth = 1.0\ngrowth_tolerance = 1.0")
        + "\n[quantization]\nsample_times = [0.05, 0.1]\nderivative_step = 0.01\n";
    let cfg = ExperimentConfig::parse(&text).unwrap();
    let r = balflow::run_quantization(&cfg, tmp.path(), 2).unwrap();
    assert_eq!(r.rows.len(), 4);
    assert_eq!(r.times.len(), 2);
    assert!(r.rows.iter().all(|row| row.density_distance.is_finite() && row.bergman_distance > 0.0));
    assert_eq!(csv_rows(&tmp.path().join("distances.csv")).len(), 4);
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_balflow"))
}

#[test]
fn cli_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let good = write_config(tmp.path(), &SMALL_SPHERE.replace("k = [3, 5]", "k = [3]"));
    let out = tmp.path().join("run");
    let status = bin().args(["balanced", "--config"]).arg(&good).arg("--out").arg(&out).args(["--seed", "9", "--threads", "1"]).output().unwrap();
    assert_eq!(status.status.code(), Some(0), "{}", String::from_utf8_lossy(&status.stderr));
    let report: serde_json::Value = serde_json::from_slice(&status.stdout).unwrap();
    assert_eq!(report["runs"][0]["k"], 3);
    assert_eq!(manifest(&out)["seed"], 9);

    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "[geometry]\nkind = \"sphere\"\n").unwrap();
    let o = bin().args(["calabi", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("geometry"));

    let o = bin().args(["calabi", "--config"]).arg(tmp.path().join("missing.toml")).output().unwrap();
    assert_eq!(o.status.code(), Some(2));

    let failing = write_config(tmp.path(), &format!("{SMALL_SPHERE}max_steps = 2\n"));
    let o = bin().args(["balanced", "--config"]).arg(&failing).arg("--out").arg(tmp.path().join("fail")).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
}
