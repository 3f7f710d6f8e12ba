use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn scvx() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_scvx"));
    cmd.env_remove("SCVX_SEED");
    cmd
}

fn write_config(dir: &Path, name: &str, problem: &str, extra: &str) -> PathBuf {
    let path = dir.join(format!("{name}.json"));
    let text = format!(
        r#"{{
  "schema_version": 1,
  "problem": "{problem}",
  "run_diagnostics": false{extra},
  "output": {{
    "trace": "{name}/trace.jsonl",
    "iterates": "{name}/iterates.jsonl",
    "summary": "{name}/summary.csv",
    "report": "{name}/report.json",
    "solution": "{name}/solution.json",
    "plots": "{name}/plots"
  }}
}}"#
    );
    fs::write(&path, text).unwrap();
    path
}

fn solve(config: &Path) -> Output {
    scvx().args(["solve", "--config"]).arg(config).output().unwrap()
}

fn trace_lines(path: &Path) -> Vec<serde_json::Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn convex_config_exits_zero_with_unit_ratios() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "lqr", "convex-lqr-box", "");
    let out = solve(&cfg);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let lines = trace_lines(&dir.path().join("lqr/trace.jsonl"));
    assert!(!lines.is_empty());
    for l in &lines {
        if let Some(rho) = l["rho"].as_f64() {
            assert!((rho - 1.0).abs() <= 1e-9, "rho {rho}");
        }
    }
    for f in ["iterates.jsonl", "summary.csv", "report.json", "solution.json", "plots/J.dat"] {
        assert!(dir.path().join("lqr").join(f).is_file(), "{f} missing");
    }
}

#[test]
fn trace_lines_are_complete_and_ordered() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "dub", "dubins-car", "");
    assert_eq!(solve(&cfg).status.code(), Some(0));
    let lines = trace_lines(&dir.path().join("dub/trace.jsonl"));
    let fields = [
        "k",
        "J",
        "L",
        "rho",
        "radius",
        "step_norm",
        "accepted",
        "predicted_decrease",
        "actual_decrease",
    ];
    let mut last_k = -1i64;
    for l in &lines {
        let obj = l.as_object().unwrap();
        assert_eq!(obj.len(), fields.len());
        for f in fields {
            assert!(obj.contains_key(f), "missing {f}");
        }
        let k = l["k"].as_i64().unwrap();
        assert!(k > last_k);
        last_k = k;
    }
    let iterates = trace_lines(&dir.path().join("dub/iterates.jsonl"));
    assert_eq!(iterates.len(), lines.len() + 1);
    assert_eq!(iterates.last().unwrap()["final"], true);
}

#[test]
fn noncompact_config_exits_three() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "nc", "noncompact-levelset", "");
    let out = solve(&cfg);
    assert_eq!(out.status.code(), Some(3));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("nc/report.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "level-set-violation");
}

#[test]
fn iteration_limit_exits_two() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "dub", "dubins-car", r#", "params": {"max_iterations": 2}"#);
    assert_eq!(solve(&cfg).status.code(), Some(2));
}

#[test]
fn malformed_config_exits_one_with_position() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, "{\n  \"schema_version\": 1,\n  \"problem\": \"toy-sharp-1d\",\n  \"sede\": 4\n}").unwrap();
    let out = solve(&cfg);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(":4:"), "{err}");
    assert!(err.contains("sede"), "{err}");

    fs::write(&cfg, "{\"schema_version\": 1, \"problem\": ").unwrap();
    assert_eq!(solve(&cfg).status.code(), Some(1));
    fs::write(&cfg, r#"{"schema_version": 1, "problem": "no-such-problem"}"#).unwrap();
    assert_eq!(solve(&cfg).status.code(), Some(1));
}

#[test]
fn same_config_gives_identical_trace() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "obs", "double-integrator-obstacle", r#", "seed": 3"#);
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for t in [&a, &b] {
        let out = scvx().args(["solve", "--config"]).arg(&cfg).arg("--trace").arg(t).output().unwrap();
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn seed_env_overrides_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "toy", "toy-sharp-1d", "");
    let run = |seed: Option<&str>, trace: &str| {
        let mut cmd = scvx();
        if let Some(s) = seed {
            cmd.env("SCVX_SEED", s);
        }
        let out = cmd.args(["solve", "--config"]).arg(&cfg).arg("--trace").arg(dir.path().join(trace)).output().unwrap();
        assert_eq!(out.status.code(), Some(0));
        fs::read(dir.path().join(trace)).unwrap()
    };
    let default = run(None, "t0");
    let seeded = run(Some("5"), "t5");
    assert_ne!(default, seeded);
    assert_eq!(seeded, run(Some("5"), "t5b"));
    let summary = fs::read_to_string(dir.path().join("toy/summary.csv")).unwrap();
    assert!(summary.lines().nth(1).unwrap().contains(",toy-sharp-1d,5,"));

    let out = scvx().env("SCVX_SEED", "abc").args(["solve", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bench_on_empty_dir_writes_header_only() {
    let dir = TempDir::new().unwrap();
    let out_csv = dir.path().join("out/summary.csv");
    let out = scvx().args(["bench", "--dir"]).arg(dir.path()).arg("--out").arg(&out_csv).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&out_csv).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("config,problem,seed,status"));
}

#[test]
fn bench_records_failures_and_continues() {
    let dir = TempDir::new().unwrap();
    write_config(dir.path(), "a", "toy-sharp-1d", "");
    write_config(dir.path(), "b", "toy-sharp-2d", "");
    fs::write(dir.path().join("c.json"), "{ not json").unwrap();
    fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
    let out_csv = dir.path().join("summary.csv");
    let out = scvx().args(["bench", "--dir"]).arg(dir.path()).arg("--out").arg(&out_csv).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let mut reader = csv::Reader::from_path(&out_csv).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(&rows[0][1], "toy-sharp-1d");
    assert_eq!(&rows[0][4], "0");
    assert_eq!(&rows[1][1], "toy-sharp-2d");
    assert_eq!(&rows[2][4], "1");
    assert!(!rows[2][18].is_empty());
}

#[test]
fn bench_on_missing_dir_fails() {
    let dir = TempDir::new().unwrap();
    let out = scvx()
        .args(["bench", "--dir"])
        .arg(dir.path().join("nope"))
        .arg("--out")
        .arg(dir.path().join("s.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn check_accepts_saved_minimizer_and_rejects_moved_point() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "toy", "toy-sharp-2d", "");
    assert_eq!(solve(&cfg).status.code(), Some(0));
    let out = scvx().args(["check", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("toy/report.json")).unwrap()).unwrap();
    assert_eq!(report["stationary"], true);

    let sol_path = dir.path().join("toy/solution.json");
    let mut sol: serde_json::Value = serde_json::from_str(&fs::read_to_string(&sol_path).unwrap()).unwrap();
    sol["z"] = serde_json::json!([0.0, 0.0]);
    fs::write(&sol_path, sol.to_string()).unwrap();
    let out = scvx().args(["check", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn check_without_solution_fails() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "toy", "toy-sharp-1d", "");
    let out = scvx().args(["check", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn shipped_configs_parse_and_run() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut names = Vec::new();
    for entry in fs::read_dir(&root).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            names.push(path);
        }
    }
    assert_eq!(names.len(), 6);
    let dir = TempDir::new().unwrap();
    for path in names {
        // Copy so outputs land in the temp dir, not the repo.
        let copy = dir.path().join(path.file_name().unwrap());
        fs::copy(&path, &copy).unwrap();
        let code = solve(&copy).status.code();
        let expected = if path.ends_with("noncompact-levelset.json") { 3 } else { 0 };
        assert_eq!(code, Some(expected), "{}", path.display());
    }
}
