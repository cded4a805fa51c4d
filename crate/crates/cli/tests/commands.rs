use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn cvsheet(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvsheet"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn report(out: &Path, command: &str) -> Value {
    let s = std::fs::read_to_string(out.join(format!("{command}.json"))).unwrap();
    serde_json::from_str(&s).unwrap()
}

fn check<'a>(rep: &'a Value, name: &str) -> &'a Value {
    rep["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap_or_else(|| panic!("no check {name}"))
}

fn config(dir: &TempDir, body: &str) -> String {
    let p = dir.path().join("run.toml");
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn stable_sample_passes() {
    let dir = TempDir::new().unwrap();
    let o = cvsheet(dir.path(), &["check-stability", "stable_3d"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let rep = report(dir.path(), "check-stability");
    assert_eq!(rep["passed"], true);
    assert_eq!(rep["tool"], "cvsheet");
    assert_eq!(rep["config_hash"].as_str().unwrap().len(), 64);
    let csv = std::fs::read_to_string(dir.path().join("stability_points.csv")).unwrap();
    assert!(csv.starts_with("# cvsheet-stability-points v1\n"));
}

#[test]
fn kelvin_helmholtz_reports_direction() {
    let dir = TempDir::new().unwrap();
    let o = cvsheet(dir.path(), &["check-stability", "kelvin_helmholtz"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("FAIL ellipticity"), "{text}");
    assert!(text.contains("unstable direction (1.000000, 0.000000)"), "{text}");
}

#[test]
fn empty_trace_is_a_schema_error() {
    let dir = TempDir::new().unwrap();
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let o = cvsheet(dir.path(), &["check-stability", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("format error"));
}

#[test]
fn compute_mu_writes_table() {
    let dir = TempDir::new().unwrap();
    let o = cvsheet(dir.path(), &["compute-mu"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let csv = std::fs::read_to_string(dir.path().join("mu.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# cvsheet-mu v1"));
    assert_eq!(lines.next(), Some("point,x1,x2,mu_upper,mu_lower"));
    assert_eq!(lines.count(), 64);
}

#[test]
fn flat_dtn_column_is_wavenumber() {
    let dir = TempDir::new().unwrap();
    let o = cvsheet(dir.path(), &["dtn"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let csv = std::fs::read_to_string(dir.path().join("dtn_spectrum.csv")).unwrap();
    let row = csv.lines().find(|l| l.starts_with("3,0,")).unwrap();
    let v: Vec<f64> = row.split(',').map(|x| x.parse().unwrap()).collect();
    // H = 20 makes tanh(3H) = 1 to machine precision
    assert!((v[3] / v[2] - 3.0).abs() < 1e-6);
    assert!((v[4] / v[2] - 3.0).abs() < 1e-6);
}

#[test]
fn curved_dtn_is_symmetric() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "[dtn]\npsi = [{ kind = \"sin\", amplitude = 0.1, k = [1, 0] }]\n");
    let o = cvsheet(dir.path(), &["dtn", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(check(&report(dir.path(), "dtn"), "symmetry")["value"].as_f64().unwrap() < 1e-8);
}

#[test]
fn large_amplitude_is_degenerate() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "[dtn]\npsi = [{ kind = \"sin\", amplitude = 9.9, k = [1, 0] }]\n");
    let o = cvsheet(dir.path(), &["dtn", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("degenerate"));
}

#[test]
fn capillary_evolution_matches_oracle() {
    let dir = TempDir::new().unwrap();
    let o = cvsheet(dir.path(), &["evolve"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    // the time-step report precedes the results
    assert!(text.find("cfl limit").unwrap() < text.find("PASS frequency").unwrap());
    assert!(check(&report(dir.path(), "evolve"), "frequency")["value"].as_f64().unwrap() < 0.01);
}

#[test]
fn kelvin_helmholtz_growth() {
    let dir = TempDir::new().unwrap();
    let cfg = config(
        &dir,
        "[evolve]\nsigma = 0.0\nperiods = 6\ninitial = [{ kind = \"cos\", amplitude = 1e-6, k = [4, 0] }]\n\
         [evolve.upper]\nrho = 1.0\nv = [0.5, 0.0]\n[evolve.lower]\nrho = 1.0\nv = [-0.5, 0.0]\n",
    );
    let o = cvsheet(dir.path(), &["evolve", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(check(&report(dir.path(), "evolve"), "growth_rate")["value"].as_f64().unwrap() < 0.05);
}

#[test]
fn energies_pass() {
    let dir = TempDir::new().unwrap();
    let o = cvsheet(dir.path(), &["energies", "--jobs", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    for f in ["energy_terms.csv", "norm_terms.csv"] {
        assert!(std::fs::read_to_string(dir.path().join(f)).unwrap().starts_with("# cvsheet-"));
    }
}

#[test]
fn symbols_pass() {
    let dir = TempDir::new().unwrap();
    let o = cvsheet(dir.path(), &["symbols"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let tables: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("symbol_tables.json")).unwrap()).unwrap();
    assert!(tables["symmetrizer_m"].as_array().is_some_and(|t| !t.is_empty()));
}

#[test]
fn broken_cutoff_is_reported_not_raised() {
    let dir = TempDir::new().unwrap();
    // coarse grids keep this quick; only the cutoff check matters here
    let cfg = config(&dir, "[cutoffs]\neps1 = 0.2\neps2 = 0.1\n[verify]\nmu_samples = 20\nn = 8\nnv = 24\n");
    let o = cvsheet(dir.path(), &["verify", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    let rep = report(dir.path(), "verify");
    assert_eq!(check(&rep, "cutoff_validity")["passed"], false);
    assert_eq!(check(&rep, "mu_jump")["passed"], true);
}

#[test]
fn runs_are_deterministic() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for d in [&a, &b] {
        cvsheet(d.path(), &["dtn", "--seed", "11"]);
    }
    let (ra, rb) = (report(a.path(), "dtn"), report(b.path(), "dtn"));
    assert_eq!(ra, rb);
    assert_eq!(ra["seed"], 11);
}

#[test]
fn unknown_config_key_is_an_error() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "[grid]\nresolution = 4\n");
    assert_eq!(cvsheet(dir.path(), &["dtn", "--config", &cfg]).status.code(), Some(2));
}
