use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use opcake_cli::MatrixFile;
use proptest::prelude::*;
use serde_json::Value;
use tempfile::TempDir;

fn opcake(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opcake"))
        .args(args)
        .env_remove("OPCAKE_THREADS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

/// Writes a real symmetric matrix (row-major) as a matrix file.
fn write_real(dir: &Path, name: &str, dim: usize, entries: &[f64]) -> PathBuf {
    let file = MatrixFile {
        dim,
        entries: entries.iter().map(|&x| [x, 0.0]).collect(),
    };
    let path = dir.join(name);
    fs::write(&path, file.to_json()).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn relent_of_equal_arguments_is_zero() {
    let dir = TempDir::new().unwrap();
    let b = write_real(dir.path(), "b.json", 2, &[2.0, 0.5, 0.5, 1.0]);
    let out = opcake(&["compute", "relent", "--a", s(&b), "--b", s(&b), "--method", "umegaki"]);
    assert_eq!(code(&out), 0);
    let doc = stdout_json(&out);
    assert!(doc["value"].as_f64().unwrap().abs() < 1e-14);
    assert_eq!(doc["method"], "umegaki");
    assert!(doc.get("error_estimate").is_none());
}

#[test]
fn relent_scalar_closed_form_by_every_method() {
    let dir = TempDir::new().unwrap();
    let a = write_real(dir.path(), "a.json", 1, &[2.0]);
    let b = write_real(dir.path(), "b.json", 1, &[1.0]);
    let expected = 2.0 * 2f64.ln() - 1.0;
    for method in ["umegaki", "frenkel-gamma", "frenkel-t"] {
        let out = opcake(&["compute", "relent", "--a", s(&a), "--b", s(&b), "--method", method]);
        assert_eq!(code(&out), 0, "{method}");
        let doc = stdout_json(&out);
        assert!((doc["value"].as_f64().unwrap() - expected).abs() < 1e-8, "{method}: {doc}");
        if method != "umegaki" {
            assert!(doc["error_estimate"].as_f64().unwrap() >= 0.0);
        }
    }
}

#[test]
fn dlog_methods_agree_and_layer_cake_of_b_is_identity() {
    let dir = TempDir::new().unwrap();
    let b = write_real(dir.path(), "b.json", 2, &[2.0, 0.5, 0.5, 1.0]);
    let h = write_real(dir.path(), "h.json", 2, &[0.3, -0.7, -0.7, -1.1]);
    let out = opcake(&["compute", "dlog", "--b", s(&b), "--h", s(&b), "--method", "layer-cake"]);
    assert_eq!(code(&out), 0);
    let m: MatrixFile = serde_json::from_value(stdout_json(&out)["matrix"].clone()).unwrap();
    let id = [[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [1.0, 0.0]];
    for (got, want) in m.entries.iter().zip(id) {
        assert!((got[0] - want[0]).abs() < 1e-8 && (got[1] - want[1]).abs() < 1e-8);
    }

    let matrices: Vec<MatrixFile> = ["daleckii-krein", "layer-cake", "finite-diff"]
        .iter()
        .map(|method| {
            let out = opcake(&["compute", "dlog", "--b", s(&b), "--h", s(&h), "--method", method]);
            assert_eq!(code(&out), 0);
            serde_json::from_value(stdout_json(&out)["matrix"].clone()).unwrap()
        })
        .collect();
    for other in &matrices[1..] {
        for (x, y) in matrices[0].entries.iter().zip(&other.entries) {
            assert!((x[0] - y[0]).abs() < 1e-6 && (x[1] - y[1]).abs() < 1e-6);
        }
    }
}

#[test]
fn hockey_stick_value() {
    let dir = TempDir::new().unwrap();
    let a = write_real(dir.path(), "a.json", 2, &[3.0, 0.0, 0.0, 1.0]);
    let b = write_real(dir.path(), "b.json", 2, &[1.0, 0.0, 0.0, 1.0]);
    let out = opcake(&["compute", "hockey-stick", "--a", s(&a), "--b", s(&b), "--gamma", "2"]);
    assert_eq!(code(&out), 0);
    assert!((stdout_json(&out)["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn malformed_input_exits_2() {
    let dir = TempDir::new().unwrap();
    let good = write_real(dir.path(), "good.json", 2, &[1.0, 0.0, 0.0, 1.0]);
    let not_pd = write_real(dir.path(), "not_pd.json", 2, &[1.0, 0.0, 0.0, -1.0]);
    let not_herm = write_real(dir.path(), "not_herm.json", 2, &[1.0, 2.0, 0.0, 1.0]);
    let short = dir.path().join("short.json");
    fs::write(&short, r#"{"dim": 2, "entries": [[1.0, 0.0]]}"#).unwrap();
    let garbage = dir.path().join("garbage.json");
    fs::write(&garbage, "not json").unwrap();
    let one = write_real(dir.path(), "one.json", 1, &[1.0]);
    let missing = dir.path().join("missing.json");

    for bad in [&not_pd, &not_herm, &short, &garbage, &missing, &one] {
        let out = opcake(&["compute", "relent", "--a", s(&good), "--b", s(bad)]);
        assert_eq!(code(&out), 2, "{}: {}", bad.display(), String::from_utf8_lossy(&out.stderr));
    }
    let out = opcake(&["compute", "hockey-stick", "--a", s(&good), "--b", s(&good), "--gamma", "-1"]);
    assert_eq!(code(&out), 2);
    assert_eq!(code(&opcake(&["compute", "relent", "--a", s(&good)])), 2);
    assert_eq!(code(&opcake(&["frobnicate"])), 2);
    assert_eq!(code(&opcake(&["--help"])), 0);
}

#[test]
fn unmet_tolerance_exits_3() {
    let dir = TempDir::new().unwrap();
    let a = write_real(dir.path(), "a.json", 2, &[3.0, 0.4, 0.4, 0.2]);
    let b = write_real(dir.path(), "b.json", 2, &[1.0, 0.1, 0.1, 0.5]);
    let out = opcake(&[
        "compute", "relent", "--a", s(&a), "--b", s(&b), "--method", "frenkel-gamma", "--max-subdivisions", "1",
        "--abs-tol", "1e-15", "--rel-tol", "1e-15",
    ]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = TempDir::new().unwrap();
    let a = write_real(dir.path(), "a.json", 2, &[3.0, 0.4, 0.4, 0.2]);
    let b = write_real(dir.path(), "b.json", 2, &[1.0, 0.1, 0.1, 0.5]);
    let strict = dir.path().join("strict.json");
    fs::write(&strict, r#"{"max_subdivisions": 1, "abs_tol": 1e-15, "rel_tol": 1e-15}"#).unwrap();
    let base = ["compute", "relent", "--a", s(&a), "--b", s(&b), "--method", "frenkel-gamma", "--config", s(&strict)];
    assert_eq!(code(&opcake(&base)), 3);
    let mut relaxed = base.to_vec();
    relaxed.extend(["--max-subdivisions", "2000", "--abs-tol", "1e-9", "--rel-tol", "1e-9"]);
    assert_eq!(code(&opcake(&relaxed)), 0);

    let unknown = dir.path().join("unknown.json");
    fs::write(&unknown, r#"{"abs_tolerance": 1e-9}"#).unwrap();
    let out = opcake(&["compute", "relent", "--a", s(&a), "--b", s(&b), "--config", s(&unknown)]);
    assert_eq!(code(&out), 2);
    let out = opcake(&["compute", "relent", "--a", s(&a), "--b", s(&b), "--abs-tol", "-1"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn thread_variable_is_validated() {
    let dir = TempDir::new().unwrap();
    let b = write_real(dir.path(), "b.json", 1, &[1.0]);
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_opcake"))
            .args(["compute", "relent", "--a", s(&b), "--b", s(&b)])
            .env("OPCAKE_THREADS", threads)
            .output()
            .unwrap()
    };
    assert_eq!(code(&run("1")), 0);
    assert_eq!(code(&run("0")), 2);
    assert_eq!(code(&run("many")), 2);
}

#[test]
fn verify_exit_codes() {
    assert_eq!(code(&opcake(&["verify", "--suite", "lipschitz", "--trials", "1000", "--seed", "7"])), 0);
    assert_eq!(code(&opcake(&["verify", "--suite", "all", "--dims", "1..1", "--trials", "50"])), 0);
    assert_eq!(code(&opcake(&["verify", "--suite", "no_such_check"])), 2);
    assert_eq!(code(&opcake(&["verify", "--suite", "lipschitz", "--dims", "3..1"])), 2);
    assert_eq!(code(&opcake(&["verify", "--suite", "lipschitz", "--dims", "0..2"])), 2);
    assert_eq!(code(&opcake(&["verify", "--suite", "lipschitz", "--trials", "0"])), 2);
    let out = opcake(&["verify", "--suite", "self_adjointness", "--dims", "2..3", "--trials", "5", "--tol", "1e-300"]);
    assert_eq!(code(&out), 1);
    let reports: Value = stdout_json(&out);
    assert!(reports[0]["failures"].as_u64().unwrap() > 0);
    assert!(!reports[0]["failing_seeds"].as_array().unwrap().is_empty());
}

fn strip_wall_time(mut v: Value) -> Value {
    for r in v.as_array_mut().unwrap() {
        r.as_object_mut().unwrap().remove("wall_time_ms");
    }
    v
}

#[test]
fn verify_reports_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let paths = [dir.path().join("r1.json"), dir.path().join("r2.json")];
    for p in &paths {
        let out = opcake(&["verify", "--suite", "all", "--dims", "1..3", "--trials", "3", "--seed", "11", "--out", s(p)]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let read = |p: &PathBuf| strip_wall_time(serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap());
    let (a, b) = (read(&paths[0]), read(&paths[1]));
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let names: Vec<&str> = a.as_array().unwrap().iter().map(|r| r["check_name"].as_str().unwrap()).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
}

fn sweep_csv(args: &[&str]) -> (i32, String) {
    let out = opcake(args);
    (code(&out), String::from_utf8(out.stdout).unwrap())
}

fn parse_rows(csv: &str) -> Vec<(f64, f64)> {
    let mut lines = csv.split('\n');
    assert_eq!(lines.next(), Some("gamma,value"));
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let (g, v) = l.split_once(',').unwrap();
            (g.parse().unwrap(), v.parse().unwrap())
        })
        .collect()
}

#[test]
fn sweep_examples() {
    let dir = TempDir::new().unwrap();
    let b = write_real(dir.path(), "b.json", 2, &[2.0, 0.5, 0.5, 1.0]);
    let (c, csv) = sweep_csv(&[
        "sweep", "--a", s(&b), "--b", s(&b), "--quantity", "hockey-stick", "--gamma-min", "0", "--gamma-max", "2",
        "--points", "21",
    ]);
    assert_eq!(c, 0);
    assert!(!csv.contains('\r'));
    let rows = parse_rows(&csv);
    assert_eq!(rows.len(), 21);
    for (g, v) in rows {
        assert!((v - (1.0 - g).max(0.0) * 3.0).abs() < 1e-12, "{g} {v}");
    }

    let a = write_real(dir.path(), "a.json", 2, &[2.0, 0.0, 0.0, 2.0]);
    let bd = write_real(dir.path(), "bd.json", 2, &[1.0, 0.0, 0.0, 2.0]);
    let out = dir.path().join("rank.csv");
    let code = code(&opcake(&[
        "sweep", "--a", s(&a), "--b", s(&bd), "--quantity", "projection-rank", "--gamma-min", "0", "--gamma-max", "3",
        "--points", "13", "--out", s(&out),
    ]));
    assert_eq!(code, 0);
    let rows = parse_rows(&fs::read_to_string(&out).unwrap());
    for w in rows.windows(2) {
        assert!(w[1].0 > w[0].0 && w[1].1 <= w[0].1);
    }
    for (g, r) in rows {
        let expected = if g < 1.0 { 2.0 } else if g < 2.0 { 1.0 } else { 0.0 };
        assert_eq!(r, expected, "γ = {g}");
    }

    let (c, csv) = sweep_csv(&[
        "sweep", "--a", s(&a), "--b", s(&bd), "--quantity", "frenkel-integrand", "--gamma-min", "0", "--gamma-max", "1",
        "--points", "2",
    ]);
    assert_eq!(c, 2, "frenkel integrand is undefined at 0: {csv}");
    let (c, csv) = sweep_csv(&[
        "sweep", "--a", s(&a), "--b", s(&bd), "--quantity", "frenkel-integrand", "--gamma-min", "0.5", "--gamma-max",
        "1", "--points", "2",
    ]);
    assert_eq!((c, parse_rows(&csv).len()), (0, 2));
}

#[test]
fn sweep_rejects_bad_ranges() {
    let dir = TempDir::new().unwrap();
    let b = write_real(dir.path(), "b.json", 1, &[1.0]);
    for (lo, hi, n) in [("1", "1", "5"), ("2", "1", "5"), ("0", "1", "1")] {
        let out = opcake(&[
            "sweep", "--a", s(&b), "--b", s(&b), "--quantity", "hockey-stick", "--gamma-min", lo, "--gamma-max", hi,
            "--points", n,
        ]);
        assert_eq!(code(&out), 2, "{lo} {hi} {n}");
    }
}

fn hermitian_file() -> impl Strategy<Value = MatrixFile> {
    (1usize..=5).prop_flat_map(|n| {
        prop::collection::vec((any::<f64>(), any::<f64>()), n * n).prop_map(move |raw| {
            let finite = |x: f64| if x.is_finite() { x % 1e6 } else { 0.0 };
            let mut entries = vec![[0.0, 0.0]; n * n];
            for i in 0..n {
                for j in i..n {
                    let (re, im) = raw[i * n + j];
                    let (re, im) = (finite(re), if i == j { 0.0 } else { finite(im) });
                    entries[i * n + j] = [re, im];
                    entries[j * n + i] = [re, -im];
                }
            }
            MatrixFile { dim: n, entries }
        })
    })
}

proptest! {
    #[test]
    fn matrix_files_round_trip_bit_exactly(file in hermitian_file()) {
        let text = file.to_json();
        let parsed = MatrixFile::parse(&text).unwrap();
        let back = MatrixFile::from_matrix(&parsed.to_matrix().unwrap());
        for (x, y) in file.entries.iter().zip(&back.entries) {
            prop_assert_eq!(x[0].to_bits(), y[0].to_bits());
            prop_assert_eq!(x[1].to_bits(), y[1].to_bits());
        }
        prop_assert_eq!(back.to_json(), text);
    }
}
