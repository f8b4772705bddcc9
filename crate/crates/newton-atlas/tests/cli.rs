use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_newton-atlas"));
    cmd.env_remove("NEWTON_ATLAS_SEED");
    cmd
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const QUARTIC: &str = r#"{"degree": 4, "roots": [[0.5, 0.0], [-0.5, 0.0], [0.0, 0.7], [0.1, -0.6]]}"#;

#[test]
fn grid_for_degree_100_has_7674_points() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["grid", "--degree", "100", "--out", "g.json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let g = json(&dir.path().join("g.json"));
    assert_eq!(g["points"].as_array().unwrap().len(), 7674);
    assert_eq!(g["degree"], 100);
    assert_eq!(g["radii"].as_array().unwrap().len(), 2);
    assert_eq!(g["phases"].as_array().unwrap().len(), 2);
    assert_eq!(g["provenance"]["tool"], "newton-atlas");
    assert_eq!(g["provenance"]["config"]["command"], "grid");

    let out = run(dir.path(), &["grid", "--degree", "100", "--phase-seed", "3", "--out", "g.csv"]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(dir.path().join("g.csv")).unwrap();
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], "circle,index,re,im");
    assert_eq!(data.len(), 7675);
    assert!(data[3838].starts_with("1,0,"));
}

#[test]
fn log_base_flag_changes_the_grid() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["grid", "--degree", "100", "--log-base", "ten", "--out", "g.json"]);
    assert_eq!(code(&out), 0);
    let g = json(&dir.path().join("g.json"));
    assert_eq!(g["points"].as_array().unwrap().len(), 1666);
    assert_eq!(g["log_base"], "ten");
}

#[test]
fn validation_failures_exit_with_1() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["solve", "--poly", "missing.json"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("missing.json"));

    fs::write(dir.path().join("bad.json"), "{\"degree\": 2,\n \"roots\": [[0.5, 0], [1.5, 0]]}").unwrap();
    let out = run(dir.path(), &["solve", "--poly", "bad.json"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("roots[1]"), "{}", stderr(&out));

    fs::write(dir.path().join("broken.json"), "{\"degree\": 2,\n \"roots\": [[0.5, 0], [0.1, 0]\n").unwrap();
    let out = run(dir.path(), &["solve", "--poly", "broken.json"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));

    fs::write(dir.path().join("p.json"), QUARTIC).unwrap();
    let out = run(dir.path(), &["solve", "--poly", "p.json", "--epsilon", "0.5"]);
    assert_eq!(code(&out), 1);
    let out = run(dir.path(), &["solve", "--poly", "p.json", "--eta", "-1"]);
    assert_eq!(code(&out), 1);
    let out = run(dir.path(), &["grid", "--degree", "1", "--out", "g.json"]);
    assert_eq!(code(&out), 1);
    let out = run(dir.path(), &["experiment", "--degrees", "20,10"]);
    assert_eq!(code(&out), 1);
    let out = run(dir.path(), &["grid", "--degree", "ten", "--out", "g.json"]);
    assert_eq!(code(&out), 1);
    let out = run(dir.path(), &["frobnicate"]);
    assert_eq!(code(&out), 1);
    let out = run(dir.path(), &["--help"]);
    assert_eq!(code(&out), 0);
}

#[test]
fn solve_writes_report_and_traces() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("p.json"), QUARTIC).unwrap();
    let out = run(dir.path(), &["solve", "--poly", "p.json", "--out", "r.json", "--trace", "traces"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let r = json(&dir.path().join("r.json"));
    for field in [
        "polynomial_id",
        "degree",
        "epsilon",
        "found_roots",
        "chosen_starts",
        "total_iterations_chosen",
        "regime_totals",
        "unresolved_count",
        "spurious_count",
        "orbit_outcomes",
        "displacement",
    ] {
        assert!(r.get(field).is_some(), "missing {field}");
    }
    assert_eq!(r["unresolved_count"], 0);
    assert_eq!(r["found_roots"].as_array().unwrap().len(), 4);
    assert_eq!(r["polynomial_id"], "p");

    for i in 0..4 {
        let text = fs::read_to_string(dir.path().join(format!("traces/root-{i:04}.jsonl"))).unwrap();
        let mut lines = text.lines();
        let header: Value = serde_json::from_str(lines.next().unwrap()).unwrap();
        assert_eq!(header["provenance"]["config"]["command"], "solve");
        let steps: Vec<Value> = lines.map(|l| serde_json::from_str(l).unwrap()).collect();
        let iterations = r["chosen_starts"][i]["iterations"].as_u64().unwrap() as usize;
        assert_eq!(steps.len(), iterations + 1);
        assert_eq!(steps[0]["n"], 0);
        for key in ["re", "im", "k", "regime", "disp"] {
            assert!(steps[0].get(key).is_some(), "missing {key}");
        }
        assert!(steps.last().unwrap()["disp"].is_null());
    }
}

#[test]
fn solve_accepts_a_grid_file_and_coefficients() {
    let dir = TempDir::new().unwrap();
    let quadratic = r#"{"degree": 2, "coeffs": [[-0.25, 0], [0, 0], [1, 0]]}"#;
    fs::write(dir.path().join("q.json"), quadratic).unwrap();
    let out = run(dir.path(), &["grid", "--degree", "2", "--phase-seed", "4", "--out", "g.json"]);
    assert_eq!(code(&out), 0);
    let out = run(dir.path(), &["solve", "--poly", "q.json", "--grid", "g.json", "--out", "r.json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let r = json(&dir.path().join("r.json"));
    let mut xs: Vec<f64> = r["found_roots"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["position"][0].as_f64().unwrap())
        .collect();
    xs.sort_by(f64::total_cmp);
    assert!((xs[0] + 0.5).abs() < 1e-10 && (xs[1] - 0.5).abs() < 1e-10, "{xs:?}");

    let out = run(dir.path(), &["grid", "--degree", "3", "--out", "g3.json"]);
    assert_eq!(code(&out), 0);
    let out = run(dir.path(), &["solve", "--poly", "q.json", "--grid", "g3.json"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn unresolved_roots_exit_with_2() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("p.json"), QUARTIC).unwrap();
    let out = run(dir.path(), &["solve", "--poly", "p.json", "--max-iter", "2", "--out", "r.json"]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    let r = json(&dir.path().join("r.json"));
    assert_eq!(r["unresolved_count"], 4);
}

#[test]
fn verify_writes_one_row_per_trial() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["verify", "--degree", "50", "--trials", "30", "--seed", "9", "--out", "c.csv"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = fs::read_to_string(dir.path().join("c.csv")).unwrap();
    assert!(text.starts_with("# newton-atlas"));
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], "seed,dc_holds,dc_min,ac_fitted_Cd,digit_max_mult");
    assert_eq!(data.len(), 31);
}

#[test]
fn experiment_with_defaults_fits_beta() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["experiment"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out_dir = dir.path().join("newton-atlas-out");
    let summary = json(&out_dir.join("summary.json"));
    assert!(summary["fit"]["beta"].as_f64().unwrap().is_finite());
    assert_eq!(summary["per_degree"].as_array().unwrap().len(), 4);
    assert_eq!(summary["epsilon_sweep"].as_array().unwrap().len(), 60);
    for name in ["rows.csv", "scaling.svg", "regimes.svg", "displacement.svg"] {
        let text = fs::read_to_string(out_dir.join(name)).unwrap();
        assert!(text.starts_with("# newton-atlas") || text.starts_with("<!-- {\"tool\":\"newton-atlas\""), "{name}");
    }
    let rows = fs::read_to_string(out_dir.join("rows.csv")).unwrap();
    assert_eq!(rows.lines().filter(|l| !l.starts_with('#')).count(), 81);
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn strip_headers(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes)
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("<!--") && !l.contains("\"workers\""))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let args = ["experiment", "--degrees", "6,12", "--trials", "3", "--seed", "5", "--out", "a"];
    assert_eq!(code(&run(dir.path(), &args)), 0);
    let first = read_all(&dir.path().join("a"));
    assert_eq!(code(&run(dir.path(), &args)), 0);
    assert_eq!(first, read_all(&dir.path().join("a")));

    // the worker count only shows up in the header
    let other = TempDir::new().unwrap();
    let more = ["experiment", "--degrees", "6,12", "--trials", "3", "--seed", "5", "--out", "a", "--workers", "3"];
    assert_eq!(code(&run(other.path(), &more)), 0);
    let second = read_all(&other.path().join("a"));
    for ((name, a), (_, b)) in first.iter().zip(&second) {
        assert_eq!(strip_headers(a), strip_headers(b), "{name}");
    }
}

#[test]
fn seed_comes_from_flag_then_env_then_default() {
    let dir = TempDir::new().unwrap();
    let verify = |extra: &[&str], env: Option<&str>, out: &str| {
        let mut cmd = bin();
        cmd.current_dir(dir.path()).args(["verify", "--degree", "20", "--trials", "5", "--out", out]).args(extra);
        if let Some(s) = env {
            cmd.env("NEWTON_ATLAS_SEED", s);
        }
        assert!(cmd.status().unwrap().success());
        fs::read_to_string(dir.path().join(out)).unwrap()
    };
    let from_env = verify(&[], Some("77"), "env.csv");
    let from_flag = verify(&["--seed", "77"], None, "flag.csv");
    let flag_wins = verify(&["--seed", "77"], Some("3"), "both.csv");
    let default = verify(&[], None, "default.csv");
    assert_eq!(strip_headers(from_env.as_bytes()), strip_headers(from_flag.as_bytes()));
    assert_eq!(strip_headers(flag_wins.as_bytes()), strip_headers(from_flag.as_bytes()));
    assert_ne!(strip_headers(default.as_bytes()), strip_headers(from_flag.as_bytes()));
    assert!(from_env.contains("\"seed\":77"));
}
