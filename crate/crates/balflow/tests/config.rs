use std::path::PathBuf;

use balflow::config::{GeometrySpec, OmegaSpec};
use balflow::{ExperimentConfig, HarnessError};

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn key_of(text: &str) -> String {
    match ExperimentConfig::parse(text) {
        Err(HarnessError::Config { key, .. }) => key,
        other => panic!("expected a config error, got {other:?}"),
    }
}

const MINIMAL: &str = r#"
[geometry]
kind = "sphere"
n_theta = 8
n_phi = 16

[omega]
family = "exp-cos"
a = 0.5
"#;

#[test]
fn shipped_configs_round_trip() {
    let mut seen = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("toml") {
            continue;
        }
        let cfg = ExperimentConfig::load(&path).unwrap();
        let canonical = cfg.to_canonical();
        let again = ExperimentConfig::parse(&canonical).unwrap();
        assert_eq!(again, cfg, "{}", path.display());
        assert_eq!(again.to_canonical(), canonical);
        assert_eq!(again.hash(), cfg.hash());
        seen += 1;
    }
    assert_eq!(seen, 5);
}

#[test]
fn defaults_fill_missing_sections() {
    let cfg = ExperimentConfig::parse(MINIMAL).unwrap();
    assert_eq!(cfg.geometry, GeometrySpec::Sphere { n_theta: 8, n_phi: 16 });
    assert_eq!(cfg.omega, OmegaSpec::ExpCos { a: 0.5 });
    assert_eq!(cfg.seed, 0);
    assert!(cfg.k.is_empty());
    let canonical = cfg.to_canonical();
    assert!(canonical.contains("[balancing]"));
    assert_eq!(ExperimentConfig::parse(&canonical).unwrap(), cfg);
}

#[test]
fn hash_tracks_content() {
    let a = ExperimentConfig::parse(MINIMAL).unwrap();
    let mut b = a.clone();
    b.seed = 1;
    assert_eq!(a.hash().len(), 64);
    assert_ne!(a.hash(), b.hash());
    let reordered = "[omega]\nfamily = \"exp-cos\"\na = 0.5\n\n[geometry]\nkind = \"sphere\"\nn_phi = 16\nn_theta = 8\n".to_string();
    assert_eq!(ExperimentConfig::parse(&reordered).unwrap().hash(), a.hash());
}

#[test]
fn errors_name_the_offending_key() {
    assert_eq!(key_of(&format!("{MINIMAL}\n[balancing]\ndtt = 1.0\n")), "balancing.dtt");
    assert_eq!(key_of(&format!("colour = 3\n{MINIMAL}")), "colour");
    assert_eq!(key_of(&format!("{MINIMAL}\n[balancing]\ndt = \"fast\"\n")), "balancing.dt");
    assert_eq!(key_of(&format!("{MINIMAL}\n[balancing]\ndt = -1.0\n")), "balancing.dt");
    assert_eq!(key_of(&format!("k = [4, 0]\n{MINIMAL}")), "k[1]");
    assert_eq!(key_of(&format!("k = [65]\n{MINIMAL}")), "k[0]");
    assert_eq!(key_of(&MINIMAL.replace("exp-cos", "exp-sin-cos")), "omega");
    assert_eq!(key_of(&MINIMAL.replace("n_theta = 8", "n_theta = 1")), "geometry");
    assert_eq!(key_of(&MINIMAL.replace("kind = \"sphere\"", "kind = \"cube\"")), "geometry.kind");
    assert_eq!(key_of(&format!("{MINIMAL}\n[pde]\nsafety = 1.5\n")), "pde.safety");
    assert_eq!(key_of(&format!("{MINIMAL}\n[quantization]\nsample_times = [0.005]\n")), "quantization.sample_times[0]");
    assert_eq!(key_of(&format!("{MINIMAL}\n[calabi]\nendgame = 1\n")), "calabi.endgame");
}

#[test]
fn omega_must_match_the_geometry_and_stay_positive() {
    let torus = "[geometry]\nkind = \"torus\"\nn_x = 16\nn_y = 16\n";
    assert_eq!(key_of(&format!("{torus}[omega]\nfamily = \"one-plus-cos\"\na = 0.1\n")), "omega.family");
    let sphere = "[geometry]\nkind = \"sphere\"\nn_theta = 8\nn_phi = 16\n";
    assert_eq!(key_of(&format!("{sphere}[omega]\nfamily = \"one-plus-cos\"\na = 1.5\n")), "omega");
    let trig = "[omega]\nfamily = \"trig\"\nc0 = 1.0\nterms = [{ p = 1, q = 0, cos = 2.0 }]\n";
    assert_eq!(key_of(&format!("{torus}{trig}")), "omega");
    assert_eq!(key_of(&format!("{torus}[omega]\nfamily = \"exp-sin-cos\"\na = 0.1\nb = 0.1\n[calabi]\nendgame = true\n")), "calabi.endgame");
}

#[test]
fn omega_families_are_normalized() {
    for text in [
        MINIMAL.to_string(),
        MINIMAL.replace("family = \"exp-cos\"", "family = \"one-plus-cos\""),
        "[geometry]\nkind = \"torus\"\nn_x = 16\nn_y = 16\n[omega]\nfamily = \"exp-sin-cos\"\na = 0.4\nb = 0.3\n".to_string(),
        "[geometry]\nkind = \"torus\"\nn_x = 16\nn_y = 16\n[omega]\nfamily = \"trig\"\nc0 = 2.0\nterms = [{ p = 1, q = 2, cos = 0.5, sin = 0.25 }]\n".to_string(),
    ] {
        let cfg = ExperimentConfig::parse(&text).unwrap();
        let g = cfg.geometry().unwrap();
        let f = cfg.omega_density(&g).unwrap();
        assert!((g.integrate(f.values()) - 1.0).abs() < 1e-14);
        assert!(f.inf() > 0.0);
    }
}

#[test]
fn trig_family_matches_its_formula() {
    let text = "[geometry]\nkind = \"torus\"\nn_x = 16\nn_y = 16\n[omega]\nfamily = \"trig\"\nc0 = 2.0\nterms = [{ p = 1, q = -2, cos = 0.5, sin = 0.25 }]\n";
    let cfg = ExperimentConfig::parse(text).unwrap();
    let g = cfg.geometry().unwrap();
    let f = cfg.omega_density(&g).unwrap();
    for p in 0..g.len() {
        let (x, y) = g.point(p);
        let expect = (2.0 + 0.5 * (x - 2.0 * y).cos() + 0.25 * (x - 2.0 * y).sin()) / 2.0;
        assert!((f.values()[p] - expect).abs() < 1e-14);
    }
}
