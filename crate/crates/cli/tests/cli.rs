use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn momlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_momlab")).args(args).output().expect("spawn momlab")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn run(scenario: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--scenario", scenario, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    momlab(&args)
}

#[test]
fn harmonic_kvn_conserves_norm() {
    let dir = TempDir::new().unwrap();
    let o = run("harmonic_kvn", dir.path(), &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m = manifest(dir.path());
    assert_eq!(m["status"], "passed");
    assert!(m["summary"]["norm_drift"].as_f64().unwrap() <= 1e-6);
    assert!(m["derived"]["dt"].as_f64().unwrap() <= m["derived"]["cfl_bound"].as_f64().unwrap());
    for f in m["outputs"].as_array().unwrap() {
        let name = f["file"].as_str().unwrap();
        let header = fs::read_to_string(dir.path().join(name)).unwrap().lines().next().unwrap().to_string();
        let cols: Vec<&str> = f["columns"].as_array().unwrap().iter().map(|c| c.as_str().unwrap()).collect();
        assert_eq!(header, cols.join(","), "{name}");
    }
}

#[test]
fn every_bundled_scenario_has_its_documented_exit_code() {
    for (name, expected) in [
        ("quantum_random", 0),
        ("mixture_family", 0),
        ("qwz_berry", 0),
        ("klimontovich_harmonic", 0),
        ("uhlmann_random", 0),
        ("hybrid_mixed", 0),
        ("hybrid_pinned", 4),
        ("harmonic_kvh", 0),
        ("harmonic_liouville", 0),
        ("free_kvn", 0),
    ] {
        let dir = TempDir::new().unwrap();
        let o = run(name, dir.path(), &[]);
        assert_eq!(code(&o), expected, "{name}: {}", stderr(&o));
    }
}

#[test]
fn unknown_key_is_a_schema_error_naming_the_key() {
    let dir = TempDir::new().unwrap();
    let o = run("harmonic_kvn", dir.path(), &["--override", "grid.nodez=64"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("nodez"), "{}", stderr(&o));

    let path = dir.path().join("typo.toml");
    let text = momlab_scenario("harmonic_kvn").replace("[time]", "[time]\ncolour = 3");
    fs::write(&path, text).unwrap();
    let o = run(path.to_str().unwrap(), &dir.path().join("out"), &[]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("colour"), "{}", stderr(&o));
}

fn momlab_scenario(name: &str) -> String {
    fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml"))).unwrap()
}

#[test]
fn dt_above_cfl_is_a_runtime_error_reporting_the_bound() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("fast.toml");
    fs::write(&path, momlab_scenario("harmonic_kvn").replace("cfl_fraction = 0.9", "dt = 0.05")).unwrap();
    let o = run(path.to_str().unwrap(), &dir.path().join("out"), &[]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let err = stderr(&o);
    assert!(err.contains("CFL") && err.contains("bound"), "{err}");
}

#[test]
fn conflicting_step_keys_are_rejected() {
    let dir = TempDir::new().unwrap();
    let o = run("harmonic_kvn", dir.path(), &["--override", "time.dt=0.001"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("mutually exclusive"));
}

#[test]
fn pinned_hybrid_is_rejected_as_inadmissible() {
    let dir = TempDir::new().unwrap();
    let o = run("hybrid_pinned", dir.path(), &[]);
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("-2.5"), "{}", stderr(&o));
}

#[test]
fn exceeded_tolerance_exits_one_and_still_writes_the_manifest() {
    let dir = TempDir::new().unwrap();
    let o = run("klimontovich_harmonic", dir.path(), &["--override", "tolerances.energy_drift=1e-9"]);
    assert_eq!(code(&o), 1);
    let m = manifest(dir.path());
    assert_eq!(m["status"], "failed");
    assert!(m["tolerance_failures"]["energy_drift"].is_object());
}

#[test]
fn runs_are_deterministic() {
    for name in ["harmonic_kvn", "klimontovich_harmonic", "quantum_random"] {
        let a = TempDir::new().unwrap();
        let b = TempDir::new().unwrap();
        assert_eq!(code(&run(name, a.path(), &["--seed", "11"])), 0);
        assert_eq!(code(&run(name, b.path(), &["--seed", "11"])), 0);
        let mut ma = manifest(a.path());
        let mut mb = manifest(b.path());
        for f in ma["outputs"].as_array().unwrap() {
            let file = f["file"].as_str().unwrap();
            assert_eq!(fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap(), "{name}/{file}");
        }
        ma.as_object_mut().unwrap().remove("wall_time_s");
        mb.as_object_mut().unwrap().remove("wall_time_s");
        assert_eq!(ma, mb, "{name}");
        assert_eq!(ma["scenario"]["seed"], 11);
    }
}

#[test]
fn seeds_change_random_scenarios() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    run("quantum_random", a.path(), &["--seed", "1"]);
    run("quantum_random", b.path(), &["--seed", "2"]);
    assert_ne!(fs::read(a.path().join("hamiltonian.csv")).unwrap(), fs::read(b.path().join("hamiltonian.csv")).unwrap());
}

#[test]
fn verify_single_module_writes_report() {
    let dir = TempDir::new().unwrap();
    let o = momlab(&["verify", "quantum_core", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(r["checks_passed"], true);
    assert_eq!(r["controls_failed"], true);
    assert_eq!(code(&momlab(&["verify", "nonsense"])), 2);
}

#[test]
fn converge_reports_second_order() {
    let dir = TempDir::new().unwrap();
    let o = momlab(&[
        "converge",
        "--quantity",
        "transport",
        "--scenario",
        "harmonic_liouville",
        "--override",
        "grid.nodes=32",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m = manifest(dir.path());
    assert!((m["slope"].as_f64().unwrap() - 2.0).abs() <= 0.3);
    let csv = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);

    let o = momlab(&["converge", "--quantity", "weak_liouville_qp"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(code(&momlab(&["converge", "--quantity", "transport", "--refinements", "2"])), 2);
}

#[test]
fn list_names_scenarios_and_quantities() {
    let o = momlab(&["list"]);
    assert_eq!(code(&o), 0);
    let s = String::from_utf8(o.stdout).unwrap();
    for needle in ["harmonic_kvn", "hybrid_pinned", "koopman", "transport", "commutator_q2p2"] {
        assert!(s.contains(needle), "{needle}");
    }
}

#[test]
fn missing_scenario_is_an_io_error() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&run("does_not_exist", dir.path(), &[])), 5);
}
