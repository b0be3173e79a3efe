use std::fs;

use hlab::experiment::{emit_report, read_curve, run_experiment, ExperimentConfig, VerificationReport, EXPERIMENTS};

fn cfg(exp: &str, body: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml_for(body, exp).unwrap()
}

const SMALL: &str = "samples = 2048\nradii_k = [2, 7]\nsteps_k = [4, 9]\n";

#[test]
fn config_round_trips_through_toml() {
    for exp in EXPERIMENTS {
        let mut c = ExperimentConfig::new(exp);
        c.map = Some("cusp_a50".into());
        c.alpha = Some(0.5);
        c.p = Some(2.0);
        c.seed = 17;
        let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        assert_eq!(c.hash().len(), 12);
    }
}

#[test]
fn hash_ignores_output_only() {
    let a = cfg("hl1", "map = 'half'\nalpha = 1.0");
    let mut b = a.clone();
    b.output = Some("elsewhere".into());
    assert_eq!(a.hash(), b.hash());
    b.seed += 1;
    assert_ne!(a.hash(), b.hash());
}

#[test]
fn bad_configs_are_rejected() {
    assert!(ExperimentConfig::from_toml("experiment = 'hl9'").is_err());
    assert!(ExperimentConfig::from_toml("experiment = 'hl1'\nunknown_key = 3").is_err());
    assert!(ExperimentConfig::from_toml_for("radii_k = [2, 3]", "hl1").is_err());
    assert!(ExperimentConfig::from_toml_for("samples = 'many'", "hl1").is_err());
}

#[test]
fn cusp_recovers_its_exponent() {
    let r = run_experiment(&cfg("hl1", &format!("map = 'cusp_a50'\nalpha = 0.5\n{SMALL}"))).unwrap();
    assert!(r.passed, "{}", r.summary_text());
    for key in ["alpha_means", "alpha_modulus"] {
        let a = r.values[key].unwrap();
        assert!((0.45..=0.55).contains(&a), "{key} {a}");
    }
}

#[test]
fn identity_map_has_a_divergent_modulus() {
    let r = run_experiment(&cfg("hl1", &format!("map = 'identity'\nalpha = 0.5\n{SMALL}"))).unwrap();
    assert!(!r.passed);
    assert!(r.has_flag("divergent_modulus"));
}

#[test]
fn contraction_is_lipschitz() {
    let r = run_experiment(&cfg("hl1", &format!("map = 'half'\nalpha = 1.0\n{SMALL}"))).unwrap();
    assert!(r.passed, "{}", r.summary_text());
    assert!(r.values["means_slope"].unwrap().abs() < 0.05);
    assert!((r.values["modulus_slope"].unwrap() - 1.0).abs() < 0.05);
}

#[test]
fn constant_map_passes_with_zero_curves() {
    let r = run_experiment(&cfg("hl2", &format!("map = 'constant'\nalpha = 1.0\np = 2.0\n{SMALL}"))).unwrap();
    assert!(r.passed, "{}", r.summary_text());
    assert!(r.has_flag("zero_curves"));
}

#[test]
fn means_and_modulus_slopes_are_consistent() {
    let r = run_experiment(&cfg("hl2", &format!("map = 'cusp_a50'\nalpha = 0.5\np = 1.0\n{SMALL}"))).unwrap();
    let (m, s) = (r.values["means_slope"].unwrap(), r.values["modulus_slope"].unwrap());
    assert!((s - (m + 1.0)).abs() <= 0.1, "{m} {s}");
}

#[test]
fn hyperbolic_derivative_is_recorded() {
    let r = run_experiment(&cfg("yamashita", &format!("map = 'half'\n{SMALL}"))).unwrap();
    let v = r.values["hyperbolic_derivative_at_0"].unwrap();
    assert!((v - 0.5).abs() < 1e-15, "{v}");
    let id = run_experiment(&cfg("yamashita", &format!("map = 'identity'\n{SMALL}"))).unwrap();
    assert!(!id.passed);
    let k = run_experiment(&cfg("yamashita", &format!("map = 'constant'\n{SMALL}"))).unwrap();
    assert_eq!(k.values["hyperbolic_derivative_at_0"], Some(0.0));
}

#[test]
fn constant_density_is_not_comparable() {
    let r = run_experiment(&cfg("qh-compare", "density = 'constant'\ndistance_pairs = 2")).unwrap();
    assert!(!r.passed);
    assert!(r.failed_criteria().contains(&"density_bounds"));
}

#[test]
fn report_json_round_trip() {
    let r = run_experiment(&cfg("hl1", &format!("map = 'cusp_a30'\nalpha = 0.3\n{SMALL}"))).unwrap();
    let back = VerificationReport::from_json(&r.to_json()).unwrap();
    assert_eq!(back, r);
    assert_eq!(back.summary_text(), r.summary_text());
    for c in &r.criteria {
        assert!(r.summary_text().contains(&c.name));
    }
}

#[test]
fn emitted_files_are_deterministic_and_reload_exactly() {
    let c = cfg("hl2", &format!("map = 'cusp_a70'\nalpha = 0.7\np = 2.0\n{SMALL}"));
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let r = run_experiment(&c).unwrap();
    let fa = emit_report(&r, a.path()).unwrap();
    let fb = emit_report(&run_experiment(&c).unwrap(), b.path()).unwrap();
    assert_eq!(fa.len(), fb.len());
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.file_name(), y.file_name());
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
    }
    for curve in &r.curves {
        let path = a.path().join(format!("{}.{}.dat", r.stem(), curve.name));
        assert_eq!(read_curve(&path).unwrap(), curve.points);
    }
}

#[test]
fn shipped_configs_load() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let c = ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        c.validate().unwrap();
        c.build_domain().unwrap();
        n += 1;
    }
    assert!(n >= 5);
}
