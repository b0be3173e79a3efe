use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn hlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hlab")).current_dir(dir).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const CUSP: &str = "map = 'cusp_a50'\nalpha = 0.5\nsamples = 2048\nradii_k = [2, 7]\nsteps_k = [4, 9]\n";

fn sorted_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn verify_passes_and_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("c.toml"), CUSP).unwrap();
    let a = hlab(tmp.path(), &["verify", "hl1", "--config", "c.toml", "--out", "a"]);
    let b = hlab(tmp.path(), &["verify", "hl1", "--config", "c.toml", "--out", "b"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(stdout(&a).replace("a/", ""), stdout(&b).replace("b/", ""));
    let fa = sorted_files(&tmp.path().join("a"));
    assert_eq!(fa, sorted_files(&tmp.path().join("b")));
    let names: Vec<&str> = fa.iter().map(|(n, _)| n.as_str()).collect();
    assert!(names.iter().any(|n| n.ends_with(".summary.json")));
    assert!(names.iter().any(|n| n.ends_with(".means.dat")));
    assert!(names.iter().any(|n| n.ends_with(".modulus.fit.txt")));
}

#[test]
fn failing_criterion_exits_one() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("c.toml"), CUSP.replace("cusp_a50", "identity")).unwrap();
    let o = hlab(tmp.path(), &["verify", "hl1", "--config", "c.toml", "--out", "."]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("divergent_modulus"));
}

#[test]
fn configuration_errors_exit_two() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("noalpha.toml"), "map = 'cusp_a50'\n").unwrap();
    fs::write(tmp.path().join("typo.toml"), "mapp = 'cusp_a50'\n").unwrap();
    fs::write(tmp.path().join("short.toml"), "map = 'half'\nalpha = 1.0\nradii_k = [2, 3]\n").unwrap();
    for cfg in ["noalpha.toml", "typo.toml", "short.toml", "missing.toml"] {
        let o = hlab(tmp.path(), &["verify", "hl1", "--config", cfg]);
        assert_eq!(o.status.code(), Some(2), "{cfg}");
        assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    }
    assert_eq!(hlab(tmp.path(), &["verify", "nonsense"]).status.code(), Some(2));
    let o = hlab(tmp.path(), &["density", "eval", "--density", "hyperbolic", "--point", "1.5,0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn report_reprints_a_summary() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("c.toml"), CUSP).unwrap();
    let v = hlab(tmp.path(), &["verify", "hl1", "--config", "c.toml", "--out", "r"]);
    let summary = fs::read_dir(tmp.path().join("r"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.to_string_lossy().ends_with(".summary.json"))
        .unwrap();
    let r = hlab(tmp.path(), &["report", summary.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(0));
    assert!(stdout(&v).starts_with(&stdout(&r)));
}

#[test]
fn density_eval_matches_closed_form() {
    let tmp = TempDir::new().unwrap();
    let o = hlab(tmp.path(), &["density", "eval", "--point", "0,0", "--point", "0.5,-0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let rows: Vec<Vec<f64>> =
        stdout(&o).lines().map(|l| l.split_whitespace().map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][2], 1.0);
    assert!((rows[1][2] - 2.0).abs() < 1e-15);
}

#[test]
fn kernel_fit_feeds_density_eval() {
    let tmp = TempDir::new().unwrap();
    let o = hlab(tmp.path(), &["kernel", "fit", "--degree", "20", "--resolution", "0.02", "--out", "k.txt"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = hlab(tmp.path(), &["density", "eval", "--density", "bergman", "--kernel", "k.txt", "--point", "0,0"]);
    assert_eq!(o.status.code(), Some(0));
    let rho: f64 = stdout(&o).split_whitespace().nth(2).unwrap().parse().unwrap();
    // the disc's Bergman density at the origin is sqrt(2)
    assert!((rho - 2f64.sqrt()).abs() < 1e-6, "{rho}");
    let o = hlab(tmp.path(), &["density", "eval", "--density", "bergman", "--kernel", "k.txt", "--domain", "ellipse 1.5 1", "--point", "0,0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn distance_prints_value_and_path() {
    let tmp = TempDir::new().unwrap();
    let o = hlab(tmp.path(), &["distance", "--from", "0,0", "--to", "0.5,0", "--resolution", "0.02", "--path-out", "p.txt"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let d: f64 = stdout(&o).trim().parse().unwrap();
    assert!((d - 0.5f64.atanh()).abs() < 1e-3 * 0.5f64.atanh(), "{d}");
    let path = fs::read_to_string(tmp.path().join("p.txt")).unwrap();
    assert!(path.lines().count() >= 2);
}

#[test]
fn means_and_modulus_write_curves() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("c.toml"), "map = 'cusp_a50'\np = 2.0\nsamples = 2048\nradii_k = [2, 7]\nsteps_k = [4, 9]\n").unwrap();
    for cmd in ["means", "modulus"] {
        let o = hlab(tmp.path(), &[cmd, "--config", "c.toml", "--out", "out"]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).starts_with(&format!("{cmd} p=2 slope")));
    }
    let names: Vec<String> = sorted_files(&tmp.path().join("out")).into_iter().map(|(n, _)| n).collect();
    assert_eq!(names.len(), 4, "{names:?}");
    assert!(names.iter().all(|n| n.starts_with("means-") || n.starts_with("modulus-")));
}

#[test]
fn overrides_change_the_config_hash() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("c.toml"), CUSP).unwrap();
    let a = stdout(&hlab(tmp.path(), &["verify", "hl1", "--config", "c.toml", "--out", "x"]));
    let b = stdout(&hlab(tmp.path(), &["verify", "hl1", "--config", "c.toml", "--out", "x", "--seed", "7"]));
    assert_ne!(a.lines().next(), b.lines().next());
}
