use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edgemarket"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("an error line");
    serde_json::from_str(line).expect("error line is JSON")
}

fn two_sp(dir: &Path) {
    let out = run(
        dir,
        &["gen-scenario", "--preset", "two-sp", "--out", "sc.json"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn solve_then_verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    two_sp(dir.path());
    let out = run(
        dir.path(),
        &[
            "solve",
            "--scenario",
            "sc.json",
            "--scheme",
            "fm",
            "--out",
            "sol.json",
        ],
    );
    assert_eq!(code(&out), 0);
    let out = run(
        dir.path(),
        &["verify", "--scenario", "sc.json", "--solution", "sol.json"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("verdict at tol 1.0e-6: pass"));
}

#[test]
fn tampered_price_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    two_sp(dir.path());
    run(
        dir.path(),
        &[
            "solve",
            "--scenario",
            "sc.json",
            "--scheme",
            "fm",
            "--out",
            "sol.json",
        ],
    );
    let path = dir.path().join("sol.json");
    let mut doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let p = &mut doc["prices"][0][0][0];
    *p = serde_json::json!(p.as_f64().unwrap() * 0.5);
    std::fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
    let out = run(
        dir.path(),
        &["verify", "--scenario", "sc.json", "--solution", "sol.json"],
    );
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn social_optimum_solution_is_written() {
    let dir = tempfile::tempdir().unwrap();
    two_sp(dir.path());
    let out = run(
        dir.path(),
        &[
            "solve",
            "--scenario",
            "sc.json",
            "--scheme",
            "so",
            "--out",
            "so.json",
        ],
    );
    assert_eq!(code(&out), 0);
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("so.json")).unwrap())
            .unwrap();
    assert_eq!(doc["scheme"], "so");
}

#[test]
fn radio_exponent_sweep_writes_one_row_per_step() {
    let dir = tempfile::tempdir().unwrap();
    two_sp(dir.path());
    let out = run(
        dir.path(),
        &[
            "sweep",
            "--scenario",
            "sc.json",
            "--target",
            "beta_radio",
            "--from",
            "1",
            "--to",
            "3",
            "--steps",
            "9",
            "--scheme",
            "fm",
            "--out",
            "sweep.csv",
            "--jobs",
            "2",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let mut reader = csv::Reader::from_path(dir.path().join("sweep.csv")).unwrap();
    let header = reader.headers().unwrap().clone();
    assert_eq!(&header[0], "param");
    assert!(header.iter().any(|h| h == "U_total"));
    let rows: Vec<_> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().all(|r| &r[2] == "fm"));
}

#[test]
fn dynamics_writes_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    two_sp(dir.path());
    let out = run(
        dir.path(),
        &["dynamics", "--scenario", "sc.json", "--trace", "trace.csv"],
    );
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("converged: true"));
    let rows = csv::Reader::from_path(dir.path().join("trace.csv"))
        .unwrap()
        .records()
        .count();
    assert!(rows > 1);
}

#[test]
fn missing_file_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "solve",
            "--scenario",
            "nope.json",
            "--scheme",
            "fm",
            "--out",
            "x.json",
        ],
    );
    assert_eq!(code(&out), 1);
    assert_eq!(stderr_json(&out)["error"], "input");
}

#[test]
fn unknown_resource_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    two_sp(dir.path());
    let path = dir.path().join("sc.json");
    let text = std::fs::read_to_string(&path)
        .unwrap()
        .replacen("\"radio\"", "\"radar\"", 1);
    std::fs::write(&path, text).unwrap();
    let out = run(
        dir.path(),
        &[
            "solve",
            "--scenario",
            "sc.json",
            "--scheme",
            "fm",
            "--out",
            "x.json",
        ],
    );
    assert_eq!(code(&out), 1);
    let err = stderr_json(&out);
    assert!(err["message"].as_str().unwrap().contains("radio"), "{err}");
}

#[test]
fn free_option_is_rejected_on_load() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = serde_json::json!({
        "schema": 1,
        "resources": [{ "name": "cpu", "kind": "compute", "unit": "vCPU" }],
        "locations": [{ "name": "l0", "capacities": {}, "energy_terms": [] }],
        "clouds": [],
        "sps": [{
            "name": "s0",
            "budget": 1.0,
            "demands": [{ "location": "l0", "facility": "edge", "demand": { "cpu": 1.0 } }]
        }]
    });
    std::fs::write(dir.path().join("free.json"), scenario.to_string()).unwrap();
    let out = run(
        dir.path(),
        &[
            "solve",
            "--scenario",
            "free.json",
            "--scheme",
            "fm",
            "--out",
            "x.json",
        ],
    );
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stderr_json(&out)["message"]
        .as_str()
        .unwrap()
        .contains("unbounded"));
}

#[test]
fn unreachable_tolerance_exits_with_solver_code() {
    let dir = tempfile::tempdir().unwrap();
    two_sp(dir.path());
    let out = run(
        dir.path(),
        &[
            "solve",
            "--scenario",
            "sc.json",
            "--scheme",
            "fm",
            "--tol",
            "1e-18",
            "--out",
            "x.json",
        ],
    );
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stderr_json(&out)["error"], "solver");
    assert!(!dir.path().join("x.json").exists());
}

#[test]
fn bad_arguments_exit_with_input_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["solve", "--scheme", "maybe"]);
    assert_eq!(code(&out), 1);
    stderr_json(&out);
}

#[test]
fn run_command_is_callable_in_process() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t1.json");
    let argv = [
        "edgemarket",
        "gen-scenario",
        "--preset",
        "table1",
        "--demand-rule",
        "sampled:3",
        "--out",
    ]
    .iter()
    .map(|s| s.to_string())
    .chain([out.display().to_string()]);
    assert_eq!(edgemarket::cli::run_command(argv), 0);
    let sc = edgemarket::io::read_scenario(&out).unwrap();
    assert_eq!(sc.sps.len(), 4);
}
