use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn stabdep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stabdep"))
        .args(args)
        .env_remove("STABDEP_CACHE_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("bad json ({e}): {}", stdout(o)))
}

/// `1 / cos^2(pi/8)`, the one-qubit extent of the T state.
fn t_extent() -> f64 {
    (std::f64::consts::PI / 8.0).cos().powi(2).recip()
}

#[test]
fn count_only_matches_formula() {
    let o = stabdep(&["enumerate", "--n", "3", "--count-only"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "lagrangians=135 states=1080");
}

#[test]
fn oversized_enumeration_is_a_guard_error() {
    assert_eq!(code(&stabdep(&["enumerate", "--n", "40"])), 3);
    assert_eq!(code(&stabdep(&["enumerate", "--n", "7"])), 3);
}

#[test]
fn enumeration_cache_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("l2.stlg");
    let o = stabdep(&["enumerate", "--n", "2", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let list = stabdep_core::enumeration::load_cache(&path, Some(2)).unwrap();
    assert_eq!(list.len(), 15);
}

#[test]
fn cache_dir_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_stabdep"))
        .args(["basis", "--n", "2"])
        .env("STABDEP_CACHE_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let cached = dir.path().join("lagrangians-n2.stlg");
    assert!(cached.exists());
    // Second run loads it.
    let o = Command::new(env!("CARGO_BIN_EXE_stabdep"))
        .args(["basis", "--n", "2"])
        .env("STABDEP_CACHE_DIR", dir.path())
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&o.stderr).contains("loading Lagrangian cache"));
    assert_eq!(stdout(&o).trim(), "60x56, nnz=168");
}

#[test]
fn basis_dimensions() {
    // |S| x (|S| - 2^n) with three entries per column.
    for (n, want) in [(1, "6x4, nnz=12"), (3, "1080x1072, nnz=3216")] {
        let o = stabdep(&["basis", "--n", &n.to_string()]);
        assert_eq!(code(&o), 0);
        assert_eq!(stdout(&o).trim(), want);
    }
}

#[test]
fn csv_export_has_one_row_per_entry() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b1.csv");
    let o = stabdep(&["basis", "--n", "1", "--format", "csv", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(stabdep_core::basis::csv_data_rows(&path).unwrap(), 12);
}

#[test]
fn memory_ceiling_and_force() {
    let o = stabdep(&["basis", "--n", "3", "--max-mem", "1K"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("estimated memory"));
    assert_eq!(code(&stabdep(&["basis", "--n", "3", "--max-mem", "1K", "--force"])), 0);
}

#[test]
fn extent_of_t_state_as_json() {
    let o = stabdep(&["extent", "--state", "t:1", "--json"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    for key in [
        "state_spec",
        "n",
        "xi",
        "l1",
        "rational_hint",
        "iterations",
        "primal_residual",
        "dual_residual",
        "wall_time_s",
        "params",
        "method",
        "converged",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["state_spec"], "t:1");
    assert_eq!(v["method"], "basis");
    assert_eq!(v["params"]["rho"], 1.0);
    assert!((v["xi"].as_f64().unwrap() - t_extent()).abs() < 1e-6);
    assert!(v["rational_hint"].is_null());
}

#[test]
fn ccz_by_dictionary() {
    let o = stabdep(&["extent", "--state", "czk:3", "--method", "dictionary", "--json"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert!((v["xi"].as_f64().unwrap() - 16.0 / 9.0).abs() < 1e-3);
    assert_eq!(v["rational_hint"], "16/9");
}

#[test]
fn extent_from_basis_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b1.bin");
    assert_eq!(code(&stabdep(&["basis", "--n", "1", "--out", path.to_str().unwrap()])), 0);
    let o = stabdep(&["extent", "--state", "t:1", "--basis-file", path.to_str().unwrap(), "--json"]);
    assert_eq!(code(&o), 0);
    assert!((json(&o)["xi"].as_f64().unwrap() - t_extent()).abs() < 1e-6);
    // Wrong qubit count for the file.
    assert_eq!(code(&stabdep(&["extent", "--state", "t:2", "--basis-file", path.to_str().unwrap()])), 2);
}

fn write_state(dir: &Path, body: &str) -> String {
    let path = dir.join("psi.txt");
    std::fs::write(&path, body).unwrap();
    format!("file:{}", path.display())
}

#[test]
fn file_states_and_normalisation() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_state(dir.path(), "# unnormalised |+>\n0 1 0\n1 1 0\n");
    assert_eq!(code(&stabdep(&["extent", "--state", &spec])), 2);
    let o = stabdep(&["extent", "--state", &spec, "--normalize", "--json"]);
    assert_eq!(code(&o), 0);
    assert!((json(&o)["xi"].as_f64().unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn validation_guard_and_convergence_exit_codes() {
    assert_eq!(code(&stabdep(&["extent", "--state", "t:1", "--rho", "-1"])), 2);
    assert_eq!(code(&stabdep(&["extent", "--state", "bogus:1"])), 2);
    assert_eq!(code(&stabdep(&["extent", "--state", "czk:5", "--method", "dictionary"])), 3);
    let o = stabdep(&["extent", "--state", "t:2", "--max-iter", "3", "--no-certify", "--json"]);
    assert_eq!(code(&o), 5);
    assert_eq!(json(&o)["converged"], false);
}

#[test]
fn results_do_not_depend_on_threads_or_repetition() {
    let run = |threads: &str| {
        let v = json(&stabdep(&["extent", "--state", "dicke:3,1", "--threads", threads, "--json"]));
        (v["xi"].as_f64().unwrap(), v["iterations"].clone())
    };
    let (a, ia) = run("1");
    let (b, ib) = run("0");
    let (c, _) = run("1");
    assert_eq!(a, c);
    assert_eq!(ia, ib);
    assert!((a - b).abs() < 1e-9);
    assert!((a - 4.0 / 3.0).abs() < 1e-6);
}

#[test]
fn verify_all_at_two_qubits() {
    let o = stabdep(&["verify", "--n", "2", "--suite", "all"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 6);
    let reports = json(&stabdep(&["verify", "--n", "2", "--suite", "all", "--json"]));
    assert!(reports.as_array().unwrap().iter().all(|r| r["passed"] == true));
}

#[test]
fn verify_columns_at_three_qubits() {
    let o = stabdep(&["verify", "--n", "3", "--suite", "columns"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("1072/1072 columns exact"));
}

#[test]
fn info_reports_limits() {
    let v = json(&stabdep(&["info", "--json"]));
    assert_eq!(v["sizes"][2]["states"], "1080");
    assert_eq!(v["default_params"]["max_iter"], 200000);
}
