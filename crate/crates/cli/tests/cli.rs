use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qbenders"))
}

fn data(stem: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(stem)
        .to_string_lossy()
        .into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qbenders-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn report(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

#[test]
fn direct_and_benders_agree_on_two_steps() {
    let inst = data("mes_t2_s0.mes.json");
    let direct = run(&["solve", "--instance", &inst, "--solver", "direct"]);
    let exact = run(&["solve", "--instance", &inst, "--solver", "benders-exact", "--gap-tol", "1e-9", "--max-iterations", "200"]);
    assert_eq!(direct.status.code(), Some(0), "{}", stderr(&direct));
    assert_eq!(exact.status.code(), Some(0), "{}", stderr(&exact));
    let a = report(&direct)["objective"].as_f64().unwrap();
    let b = report(&exact)["objective"].as_f64().unwrap();
    assert!((a - b).abs() <= 1e-6 * a.abs(), "{a} vs {b}");
    assert_eq!(report(&exact)["status"], "optimal_within_gap");
}

#[test]
fn iteration_limit_has_its_own_exit_code() {
    let o = run(&["solve", "--mes", "3", "--solver", "benders-exact", "--gap-tol", "1e-9", "--max-iterations", "1"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert_eq!(report(&o)["status"], "iteration_limit");
}

#[test]
fn infeasible_model_exits_with_four() {
    let dir = scratch("infeasible");
    let path = dir.join("tiny.model.json");
    // x + y >= 3 with both bounded by 1
    std::fs::write(
        &path,
        r#"{"format": "qbenders-milp", "version": 1, "model": {
  "name": "tiny", "metadata": {},
  "variables": [
    {"name": "x", "kind": "continuous", "lower": 0.0, "upper": 1.0, "cost": 1.0},
    {"name": "y", "kind": "integer", "lower": 0.0, "upper": 1.0, "cost": 1.0}
  ],
  "constraints": [{"name": "c", "sense": ">=", "rhs": 3.0, "coeffs": [[0, 1.0], [1, 1.0]]}]
}}"#,
    )
    .unwrap();
    for solver in ["direct", "benders-exact"] {
        let o = run(&["solve", "--instance", path.to_str().unwrap(), "--solver", solver]);
        assert_eq!(o.status.code(), Some(4), "{solver}: {}", stderr(&o));
        assert_eq!(report(&o)["status"], "infeasible");
    }
}

#[test]
fn malformed_inputs_name_line_and_field() {
    let dir = scratch("malformed");
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, "reads = 5\nraeds = 3\n").unwrap();
    let o = run(&["solve", "--mes", "2", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("line 2") && err.contains("raeds"), "{err}");

    let model = dir.join("broken.model.json");
    std::fs::write(&model, "{\n  \"format\": \"qbenders-milp\",\n  \"version\": 1,\n  \"model\": {\"name\": 3}\n}\n").unwrap();
    let o = run(&["solve", "--instance", model.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));

    let o = run(&["solve", "--mes", "2", "--mes", "3"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["solve", "--mes", "2", "--reads", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("reads"), "{}", stderr(&o));
}

#[test]
fn extrapolation_needs_device_time() {
    let dir = scratch("extrapolate");
    let mock = dir.join("mock.json");
    let log = dir.join("mock.jsonl");
    let o = run(&[
        "solve", "--mes", "2", "--solver", "benders-mock", "--device-time-ms", "50",
        "--report", mock.to_str().unwrap(), "--log", log.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(&o);
    let iters = r["sampler"]["sampler_iterations"].as_u64().unwrap() as f64;
    let t = &r["timings"];
    let want = 0.1 * t["data_processing"].as_f64().unwrap() + t["subproblem"].as_f64().unwrap() + 0.05 * iters;

    for input in [&mock, &log] {
        let o = run(&["extrapolate", input.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let e = report(&o);
        assert!((e["best_case"]["total"].as_f64().unwrap() - want).abs() <= 1e-12);
        assert_eq!(e["raw"]["total"], t["total"]);
    }

    let direct = dir.join("direct.json");
    let o = run(&["solve", "--mes", "2", "--solver", "direct", "--report", direct.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["extrapolate", direct.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("device-time"), "{}", stderr(&o));
}

fn column(csv: &Path, name: &str) -> Vec<String> {
    let mut r = csv::Reader::from_path(csv).unwrap();
    let idx = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|rec| rec.unwrap()[idx].to_string()).collect()
}

#[test]
fn compare_writes_stable_tables() {
    let mut runs = Vec::new();
    for k in 0..2 {
        let out = scratch(&format!("compare{k}"));
        let o = run(&[
            "compare", "--mes", "2", "--instance", &data("mes_t3_s0.mes.json"), "--solvers", "direct,benders-exact",
            "--out-dir", out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        runs.push(out);
    }
    let summary = runs[0].join("summary.csv");
    // files come first, then generated instances
    assert_eq!(column(&summary, "instance"), ["mes_t3_s0", "mes_t3_s0", "mes_t2_s0", "mes_t2_s0"]);
    assert_eq!(column(&summary, "solver"), ["direct", "benders-exact", "direct", "benders-exact"]);
    for c in ["status", "objective", "gap_reference", "iterations"] {
        assert_eq!(column(&summary, c), column(&runs[1].join("summary.csv"), c), "column {c}");
    }
    assert_eq!(column(&summary, "gap_reference")[0], "0.0");
    let plot = runs[0].join("plot.csv");
    assert_eq!(column(&plot, "x"), ["3", "2"]);
    assert_eq!(column(&plot, "benders-exact").len(), 2);
    let log = std::fs::read_to_string(runs[0].join("runs.jsonl")).unwrap();
    assert_eq!(log.lines().filter(|l| l.contains("\"type\":\"result\"")).count(), 4);
}

#[test]
fn compare_records_failed_cells() {
    let out = scratch("compare-fail");
    let o = run(&[
        "compare", "--mes", "2", "--instance", "/nonexistent/model.json", "--solvers", "direct",
        "--out-dir", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    let summary = out.join("summary.csv");
    assert_eq!(column(&summary, "status"), ["error", "optimal_within_gap"]);
    assert_eq!(column(&summary, "instance")[0], "/nonexistent/model.json");
    assert!(!column(&summary, "error")[0].is_empty());
}

#[test]
fn generated_datasets_match_checked_in_files() {
    let out = scratch("generate");
    let o = run(&["generate", "--steps", "2,5", "--seed", "0", "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["mes_t2_s0.model.json", "mes_t2_s0.mes.json", "mes_t5_s0.model.json", "mes_t5_s0.mes.json"] {
        let fresh = std::fs::read_to_string(out.join(f)).unwrap();
        assert_eq!(fresh, std::fs::read_to_string(data(f)).unwrap(), "{f}");
    }
    let o = run(&["stats", "--instance", &data("mes_t4_s0.mes.json")]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.lines().nth(1).unwrap().starts_with("mes_t4_s0,77,41,36,36,"), "{text}");
}
