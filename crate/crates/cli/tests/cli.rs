use serde_json::Value;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use tempfile::TempDir;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cavity-ghz"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, json).unwrap();
    path.to_str().unwrap().to_owned()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_owned).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(str::to_owned).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn simulate_writes_trajectory_over_gate_time() {
    let tmp = TempDir::new().unwrap();
    let out = cli(&["simulate", "--preset", "paper_n4", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let (header, rows) = read_csv(&tmp.path().join("trajectory.csv"));
    assert_eq!(header, ["t_ns", "fidelity", "F_in_model", "norm_defect", "top_fock_pop"]);
    assert!(rows.len() >= 200);
    let t = column(&header, &rows, "t_ns");
    assert_eq!(t[0], 0.0);
    assert!((t[t.len() - 1] - 10.0).abs() < 1e-9);
    assert!(rows[1][1].contains('e') && rows[1][1].len() >= 18);

    let s = summary(tmp.path());
    assert_eq!(s["config"]["n_qubits"], 4);
    assert_eq!(s["config"]["n_max"], 12);
    assert!(s["config"]["settings"]["rel_tol"].is_number());
    assert!(s["ghz_fidelity"].is_number());
    assert!(s["budget"]["kappa"].is_number());
    assert!(s["warnings"].is_array());
    let text = fs::read_to_string(tmp.path().join("trajectory.csv")).unwrap();
    assert!(!text.contains('\r'));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [&a, &b] {
        let out = cli(&["simulate", "--preset", "paper_n2", "--out", dir.path().to_str().unwrap()]);
        assert_eq!(code(&out), 0);
    }
    for file in ["trajectory.csv", "summary.json"] {
        assert_eq!(fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap(), "{file}");
    }
}

#[test]
fn single_qubit_run_has_no_ghz_fidelity() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "n1.json", r#"{"n_qubits": 1}"#);
    let out = cli(&["simulate", "--preset", "paper_n2", "--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(tmp.path());
    assert!(s.get("ghz_fidelity").is_none());
    assert!(s["final_fidelity"].is_number());
}

#[test]
fn omega_sweep_improves_monotonically() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "sweep.json",
        r#"{"sweep": [{"parameter": "omega_over_delta", "values": [2, 4, 6, 8, 10]}]}"#,
    );
    let out = cli(&["sweep", "--preset", "paper_n2", "--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&tmp.path().join("sweep.csv"));
    assert_eq!(header[0], "omega_over_delta");
    assert_eq!(rows.len(), 5);
    let inf = column(&header, &rows, "infidelity");
    assert!(inf.windows(2).all(|w| w[1] < w[0]), "{inf:?}");
    assert_eq!(summary(tmp.path())["points"], 5);
}

#[test]
fn effective_model_is_insensitive_to_thermal_occupation() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "thermal.json",
        r#"{"source": "effective", "n_max": 48,
            "sweep": [{"parameter": "n_bar", "start": 0, "stop": 0.5, "steps": 3}]}"#,
    );
    let out = cli(&["sweep", "--preset", "paper_n2", "--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&tmp.path().join("sweep.csv"));
    let f = column(&header, &rows, "final_fidelity");
    assert_eq!(f.len(), 3);
    let spread = f.iter().cloned().fold(f64::MIN, f64::max) - f.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread <= 1e-6, "{f:?}");
}

#[test]
fn budget_reports_rates() {
    let tmp = TempDir::new().unwrap();
    let out = cli(&["budget", "--preset", "paper_n4", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let b: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("budget.json")).unwrap()).unwrap();
    assert!((b["gate_time"].as_f64().unwrap() - 10.0).abs() < 1e-9);
    for key in ["gamma_eff", "kappa", "eta_far_detuned"] {
        assert!(b[key].as_f64().unwrap() > 0.0, "{key}");
    }
}

#[test]
fn config_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().to_str().unwrap();
    let unknown = write_config(tmp.path(), "unknown.json", r#"{"n_qbits": 2}"#);
    let empty = write_config(tmp.path(), "empty.json", r#"{"sweep": []}"#);
    let no_gamma = write_config(tmp.path(), "nogamma.json", r#"{"loss": {"gamma0": null}}"#);
    let bad_axis = write_config(tmp.path(), "axis.json", r#"{"sweep": [{"parameter": "colour", "values": [1]}]}"#);

    assert_eq!(code(&cli(&["simulate", "--preset", "paper_n2", "--config", &unknown, "--out", dir])), 2);
    assert_eq!(code(&cli(&["sweep", "--preset", "paper_n2", "--config", &empty, "--out", dir])), 2);
    assert_eq!(code(&cli(&["sweep", "--preset", "paper_n2", "--config", &bad_axis, "--out", dir])), 2);
    assert_eq!(code(&cli(&["simulate", "--preset", "nope", "--out", dir])), 2);
    assert_eq!(code(&cli(&["simulate", "--out", dir])), 2);

    let out = cli(&["budget", "--preset", "paper_n2", "--config", &no_gamma, "--out", dir]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamma0"));
}

#[test]
fn physics_errors_exit_3() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().to_str().unwrap();
    let negative = write_config(tmp.path(), "neg.json", r#"{"delta": -1.0}"#);
    let zero_q = write_config(tmp.path(), "q.json", r#"{"loss": {"quality_factor": 0}}"#);
    let no_ladder = write_config(tmp.path(), "n0.json", r#"{"n_max": 0}"#);
    assert_eq!(code(&cli(&["simulate", "--preset", "paper_n2", "--config", &negative, "--out", dir])), 3);
    assert_eq!(code(&cli(&["budget", "--preset", "paper_n2", "--config", &zero_q, "--out", dir])), 3);
    assert_eq!(code(&cli(&["simulate", "--preset", "paper_n2", "--config", &no_ladder, "--out", dir])), 3);
}

#[test]
fn loose_tolerance_is_reported_as_failed_run() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "loose.json",
        r#"{"settings": {"rel_tol": 0.5, "abs_tol": 0.5, "max_step": 2.0}}"#,
    );
    let out = cli(&["simulate", "--preset", "paper_n2", "--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&out), 4);
    assert_eq!(summary(tmp.path())["failed"], true);
}

#[test]
fn fast_validation_passes() {
    let out = cli(&["validate", "--level", "fast"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(code(&out), 0, "{text}");
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 10);
    assert!(!text.lines().any(|l| l.starts_with("FAIL")));
}
