use std::path::PathBuf;
use std::process::Command;

use serde_json::{json, Value};
use tempfile::TempDir;

use stabgi::diagmodel::{diag_gi, DiagonalOperator};
use stabgi::geninv::moore_penrose;
use stabgi::Matrix;

struct Run {
    code: i32,
    json: Value,
    stderr: String,
}

fn stabgi(args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_stabgi"));
    cmd.args(args).env_remove("SPGI_TOL").env_remove("SPGI_SEED");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("spawn");
    Run {
        code: out.status.code().unwrap(),
        json: serde_json::from_slice(&out.stdout).unwrap_or(Value::Null),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn matrix(v: &Value) -> Matrix {
    serde_json::from_value(v.clone()).unwrap()
}

fn setup() -> (TempDir, String) {
    let dir = tempfile::tempdir().unwrap();
    let t = write(&dir, "t.csv", "1,0\n0,0\n");
    (dir, t)
}

#[test]
fn geninv_moore_penrose() {
    let (_dir, t) = setup();
    let run = stabgi(&["geninv", "--t", &t, "--moore-penrose"], &[]);
    assert_eq!(run.code, 0);
    assert_eq!(run.json["schema"], "stabgi/1");
    assert_eq!(matrix(&run.json["S"]), Matrix::from_diag(&[1.0, 0.0]));
    assert_eq!(run.json["rank"], 1);
    assert_eq!(run.json["c"], 1.0);
}

#[test]
fn geninv_prescribed_complements() {
    let (dir, t) = setup();
    let m = write(&dir, "m.csv", "1\n1\n");
    let w = write(&dir, "w.csv", "0\n1\n");
    let run = stabgi(&["geninv", "--t", &t, "--m", &m, "--w", &w], &[]);
    assert_eq!(run.code, 0);
    let s = matrix(&run.json["S"]);
    let want = Matrix::from_rows(&[&[1.0, 0.0], &[1.0, 0.0]]);
    assert!((&s - &want).max_abs() <= 1e-12, "{s:?}");
}

#[test]
fn geninv_rejects_non_complement_with_witness() {
    let (dir, t) = setup();
    let m = write(&dir, "m.csv", "0\n1\n");
    let run = stabgi(&["geninv", "--t", &t, "--m", &m], &[]);
    assert_eq!(run.code, 2);
    assert_eq!(run.json["error"]["kind"], "complement");
    assert_eq!(run.json["error"]["witness"], json!([0.0, 1.0]));
    assert!(run.stderr.contains("not a complement"));
}

#[test]
fn malformed_csv_reports_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let t = write(&dir, "t.csv", "1,2\n3,x\n");
    let run = stabgi(&["geninv", "--t", &t], &[]);
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("line 2, column 3"), "{}", run.stderr);
}

#[test]
fn missing_file_is_input_error() {
    let run = stabgi(&["geninv", "--t", "/nonexistent/t.csv"], &[]);
    assert_eq!(run.code, 1);
}

#[test]
fn analyze_zero_perturbation() {
    let (dir, t) = setup();
    let dt = write(&dir, "dt.csv", "0,0\n0,0\n");
    let run = stabgi(&["analyze", "--t", &t, "--dt", &dt], &[]);
    assert_eq!(run.code, 0);
    let r = &run.json;
    for key in ["carrier_bijective", "restricted_bijective", "decomposition"] {
        assert_eq!(r["dl1"][key]["value"], true, "{key}");
    }
    for key in ["stable", "g_is_inverse", "maps_null_into_range", "range_transport", "null_transport"] {
        assert_eq!(r["dl2"][key]["value"], true, "{key}");
    }
    let g = matrix(&r["G"]["matrix"]);
    assert!((&g - &Matrix::from_diag(&[1.0, 0.0])).max_abs() <= 1e-12);
    assert_eq!(r["G"]["certified"], true);
}

#[test]
fn analyze_reports_uncertified_g_when_unstable() {
    let (dir, t) = setup();
    let dt = write(&dir, "dt.csv", "0,0\n0,0.5\n");
    let run = stabgi(&["analyze", "--t", &t, "--dt", &dt], &[]);
    assert_eq!(run.code, 0);
    assert_eq!(run.json["stable"]["value"], false);
    assert_eq!(run.json["G"]["certified"], false);
    assert_eq!(run.json["G"]["residuals"]["r1"], 0.5);
    assert!(run.json["Pbar"].is_null());
}

#[test]
fn analyze_stable_pair_writes_out_file() {
    let (dir, t) = setup();
    let dt = write(&dir, "dt.csv", "0.5,0\n0,0\n");
    let out: PathBuf = dir.path().join("report.json");
    let run = stabgi(
        &["analyze", "--t", &t, "--dt", &dt, "--out", out.to_str().unwrap()],
        &[],
    );
    assert_eq!(run.code, 0);
    assert!(run.json.is_null(), "report goes to the file only");
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let g = matrix(&report["G"]["matrix"]);
    assert!((&g - &Matrix::from_diag(&[2.0 / 3.0, 0.0])).max_abs() <= 1e-12);
    assert_eq!(report["stable"]["value"], true);
}

#[test]
fn analyze_shape_mismatch_is_precondition_error() {
    let (dir, t) = setup();
    let dt = write(&dir, "dt.csv", "0,0,0\n0,0,0\n");
    assert_eq!(stabgi(&["analyze", "--t", &t, "--dt", &dt], &[]).code, 2);
}

#[test]
fn tolerance_from_environment_and_flag() {
    let (dir, t) = setup();
    let dt = write(&dir, "dt.csv", "0,0\n0,0\n");
    let args = ["analyze", "--t", t.as_str(), "--dt", dt.as_str()];
    assert_eq!(stabgi(&args, &[("SPGI_TOL", "1e-6")]).json["tol"], 1e-6);
    let mut with_flag = args.to_vec();
    with_flag.extend(["--tol", "1e-7"]);
    assert_eq!(stabgi(&with_flag, &[("SPGI_TOL", "1e-6")]).json["tol"], 1e-7);
    assert_eq!(stabgi(&args, &[("SPGI_TOL", "-1")]).code, 1);
}

#[test]
fn battery_empty_and_seeded() {
    let empty = stabgi(&["battery", "--instances", "0"], &[]);
    assert_eq!(empty.code, 0);
    assert_eq!(empty.json["instances_run"], 0);

    let a = stabgi(&["battery", "--instances", "40", "--max-dim", "5"], &[("SPGI_SEED", "9")]);
    let b = stabgi(&["battery", "--instances", "40", "--max-dim", "5", "--seed", "9"], &[]);
    assert_eq!(a.code, 0);
    assert_eq!(a.json["seed"], 9);
    assert_eq!(a.json, b.json);
}

#[test]
fn battery_null_hitting_is_all_unstable() {
    let run = stabgi(
        &["battery", "--instances", "50", "--regime", "null-hitting", "--seed", "4"],
        &[],
    );
    assert_eq!(run.code, 0);
    assert_eq!(run.json["stable_count"], 0);
    let excluded = run.json["instances_excluded"].as_u64().unwrap();
    assert_eq!(run.json["unstable_count"].as_u64().unwrap() + excluded, 50);
}

#[test]
fn battery_rejects_bad_dimension_bound() {
    assert_eq!(stabgi(&["battery", "--max-dim", "40"], &[]).code, 1);
    assert_eq!(stabgi(&["battery", "--regime", "sideways"], &[]).code, 1);
}

fn diag_spec(dir: &TempDir, spec: Value) -> String {
    write(dir, "diag.json", &spec.to_string())
}

#[test]
fn diag_linear_family() {
    let dir = tempfile::tempdir().unwrap();
    let spec = diag_spec(
        &dir,
        json!({
            "truncation": 8,
            "t": {"kind": "formula", "expr": "linear", "alpha": 1.0, "beta": 0.0},
            "d": {"kind": "formula", "expr": "linear", "alpha": -0.5, "beta": 0.0}
        }),
    );
    let run = stabgi(&["diag", "--spec", &spec, "--truncate", "8"], &[]);
    assert_eq!(run.code, 0);
    let d = &run.json["diag"];
    assert_eq!(d["b_min"], 0.5);
    assert_eq!(d["bc"], 0.5);
    assert_eq!(d["stable"], true);
    let g: Vec<f64> = serde_json::from_value(d["g_entries"].clone()).unwrap();
    for (k, gk) in g.iter().enumerate() {
        assert!((gk - 2.0 / (k + 1) as f64).abs() <= 1e-15);
    }
    assert_eq!(run.json["agree"], true);
}

#[test]
fn diag_zero_perturbation_gives_tseng_inverse() {
    let dir = tempfile::tempdir().unwrap();
    let t = vec![3.0, 0.0, -2.0, 0.5];
    let spec = diag_spec(
        &dir,
        json!({
            "truncation": 4,
            "t": {"kind": "explicit", "values": t},
            "d": {"kind": "explicit", "values": [0.0, 0.0, 0.0, 0.0]}
        }),
    );
    let run = stabgi(&["diag", "--spec", &spec], &[]);
    assert_eq!(run.code, 0);
    let g: Vec<f64> = serde_json::from_value(run.json["diag"]["g_entries"].clone()).unwrap();
    let expect = diag_gi(&DiagonalOperator::new(t).unwrap());
    assert_eq!(g, expect.entries());
}

#[test]
fn diag_perturbed_zero_pattern_is_unstable() {
    let dir = tempfile::tempdir().unwrap();
    let spec = diag_spec(
        &dir,
        json!({
            "truncation": 3,
            "t": {"kind": "explicit", "values": [0.0, 1.0, 2.0]},
            "d": {"kind": "explicit", "values": [1.0, 0.0, 0.0]}
        }),
    );
    let run = stabgi(&["diag", "--spec", &spec], &[]);
    assert_eq!(run.code, 0);
    assert_eq!(run.json["diag"]["stable"], false);
    assert_eq!(run.json["matrix_stable"], false);
}

#[test]
fn diag_unknown_family_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let spec = diag_spec(
        &dir,
        json!({
            "truncation": 3,
            "t": {"kind": "formula", "expr": "exponential"},
            "d": {"kind": "explicit", "values": [0.0, 0.0, 0.0]}
        }),
    );
    let run = stabgi(&["diag", "--spec", &spec], &[]);
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("exponential"));
}

#[test]
fn emitted_matrices_round_trip_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let t = Matrix::from_rows(&[&[0.1, 1.0 / 3.0, 2.0], &[1e-300, -7.25, 0.3]]);
    let path = write(&dir, "t.csv", &t.to_csv());
    let run = stabgi(&["geninv", "--t", &path], &[]);
    assert_eq!(run.code, 0);
    let from_cli = matrix(&run.json["S"]);
    let from_lib = moore_penrose(&t).unwrap().s;
    let bits = |m: &Matrix| m.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&from_cli), bits(&from_lib));
}
