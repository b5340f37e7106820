//! End-to-end tests of the `auditsched` binary: exit codes, document
//! round-trips through the CLI, and the external-backend protocol.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_auditsched"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn assert_code(output: &Output, code: i32) {
    assert_eq!(
        output.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        stdout(output),
        stderr(output)
    );
}

fn workdir(tag: &str) -> tempfile::TempDir {
    tempfile::Builder::new()
        .prefix(&format!("auditsched-cli-{tag}-"))
        .tempdir()
        .expect("tempdir")
}

/// Generate a small instance document and return its path.
fn generate_small(dir: &Path, seed: u64) -> PathBuf {
    let path = dir.join(format!("instance-{seed}.json"));
    let output = run(&[
        "generate",
        "--output",
        path.to_str().unwrap(),
        "--seed",
        &seed.to_string(),
        "--auditors",
        "3",
        "--engagements",
        "2",
        "--phases",
        "1",
        "--levels",
        "2",
        "--indices",
        "2",
        "--days",
        "12",
        "--window-density",
        "0.4",
        "--scarcity",
        "0.3",
        "--mocks",
        "1",
    ]);
    assert_code(&output, 0);
    path
}

#[test]
fn generate_validate_solve_gantt_pipeline() {
    let dir = workdir("pipeline");
    let instance = generate_small(dir.path(), 7);

    let validated = run(&["validate", instance.to_str().unwrap()]);
    assert_code(&validated, 0);

    let schedule = dir.path().join("schedule.json");
    let solved = run(&[
        "solve",
        instance.to_str().unwrap(),
        "--output",
        schedule.to_str().unwrap(),
    ]);
    assert_code(&solved, 0);
    assert!(stdout(&solved).contains("objective"), "{}", stdout(&solved));

    // The schedule document must be a valid JSON object with provenance.
    let text = std::fs::read_to_string(&schedule).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["provenance"]["status"], "optimal");

    let chart = run(&[
        "gantt",
        instance.to_str().unwrap(),
        "--schedule",
        schedule.to_str().unwrap(),
    ]);
    assert_code(&chart, 0);
    assert!(
        stdout(&chart).starts_with("schedule over 12 days"),
        "{}",
        stdout(&chart)
    );
}

#[test]
fn generation_is_deterministic_per_seed() {
    let dir = workdir("determinism");
    let a = generate_small(dir.path(), 11);
    let b = dir.path().join("again.json");
    std::fs::rename(&a, &b).unwrap();
    let a = generate_small(dir.path(), 11);
    assert_eq!(
        std::fs::read_to_string(&a).unwrap(),
        std::fs::read_to_string(&b).unwrap()
    );
}

#[test]
fn update_against_previous_schedule_reports_changes() {
    let dir = workdir("update");
    let instance = generate_small(dir.path(), 7);
    let first = dir.path().join("first.json");
    assert_code(
        &run(&[
            "solve",
            instance.to_str().unwrap(),
            "--output",
            first.to_str().unwrap(),
        ]),
        0,
    );

    // Unchanged instance, dominant stability terms: the update must keep
    // every assignment where it was.
    let second = dir.path().join("second.json");
    let updated = run(&[
        "update",
        instance.to_str().unwrap(),
        "--previous",
        first.to_str().unwrap(),
        "--output",
        second.to_str().unwrap(),
        "--stability-reward",
        "100000",
        "--stability-penalty",
        "100000",
    ]);
    assert_code(&updated, 0);
    let report = stdout(&updated);
    assert!(report.contains("0 auditor change(s)"), "{report}");
    assert!(report.contains("0 start shift(s)"), "{report}");
}

#[test]
fn compare_reports_both_formulations() {
    let dir = workdir("compare");
    let instance = generate_small(dir.path(), 3);
    let output = run(&["compare", instance.to_str().unwrap()]);
    assert_code(&output, 0);
    let text = stdout(&output);
    assert!(text.contains("flow"), "{text}");
    assert!(text.contains("dense"), "{text}");
    assert!(text.contains("objectives agree"), "{text}");
}

#[test]
fn missing_file_is_an_input_error() {
    let output = run(&["validate", "/nonexistent/instance.json"]);
    assert_code(&output, 3);
}

#[test]
fn malformed_json_is_an_input_error() {
    let dir = workdir("malformed");
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{\"schema_version\": 1, \"horizon").unwrap();
    let output = run(&["solve", path.to_str().unwrap()]);
    assert_code(&output, 3);
}

#[test]
fn unknown_field_is_rejected_by_name() {
    let dir = workdir("unknown-field");
    let instance = generate_small(dir.path(), 5);
    let mut doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&instance).unwrap()).unwrap();
    doc.as_object_mut()
        .unwrap()
        .insert("surprise".into(), serde_json::json!(true));
    let path = dir.path().join("extra.json");
    std::fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
    let output = run(&["validate", path.to_str().unwrap()]);
    assert_code(&output, 3);
    assert!(stderr(&output).contains("surprise"), "{}", stderr(&output));
}

#[test]
fn validation_issues_are_each_reported() {
    let dir = workdir("validation");
    let instance = generate_small(dir.path(), 5);
    let mut doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&instance).unwrap()).unwrap();
    // Point a task at a level that does not exist.
    let engagement = doc["engagements"]
        .as_array_mut()
        .unwrap()
        .iter_mut()
        .find(|e| !e["tasks"].as_array().unwrap().is_empty())
        .expect("some engagement has tasks");
    engagement["tasks"][0]["level"] = serde_json::json!("L99");
    let path = dir.path().join("bad-level.json");
    std::fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
    let output = run(&["validate", path.to_str().unwrap()]);
    assert_code(&output, 3);
    // Each issue is listed on stdout; the count summary goes to stderr.
    assert!(stdout(&output).contains("L99"), "{}", stdout(&output));
}

/// An instance with one task no auditor can perform: solve must exit 2.
#[test]
fn uncoverable_task_exits_infeasible() {
    let dir = workdir("infeasible");
    let instance = generate_small(dir.path(), 9);
    let mut doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&instance).unwrap()).unwrap();
    // A 400h (40000 centihour) task cannot fit any window at 8h per day.
    let engagement = doc["engagements"]
        .as_array_mut()
        .unwrap()
        .iter_mut()
        .find(|e| !e["tasks"].as_array().unwrap().is_empty())
        .expect("some engagement has tasks");
    engagement["tasks"][0]["hours"] = serde_json::json!(40_000);
    let path = dir.path().join("uncoverable.json");
    std::fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
    let output = run(&["solve", path.to_str().unwrap()]);
    assert_code(&output, 2);
}

#[test]
fn missing_backend_executable_exits_backend_error() {
    let dir = workdir("no-backend");
    let instance = generate_small(dir.path(), 7);
    let output = run(&[
        "solve",
        instance.to_str().unwrap(),
        "--backend",
        "/nonexistent/solver",
    ]);
    assert_code(&output, 4);
}

#[test]
fn backend_env_variable_is_honored() {
    let dir = workdir("env-backend");
    let instance = generate_small(dir.path(), 7);
    let output = bin()
        .args(["solve", instance.to_str().unwrap()])
        .env("AUDITSCHED_BACKEND", "/nonexistent/solver")
        .output()
        .unwrap();
    assert_code(&output, 4);
}

/// Minimal external backend: parses the LP dump, brute-forces the binary
/// program, and writes the solution file per the documented protocol.
const STUB_BACKEND: &str = r#"#!/usr/bin/env python3
import itertools, re, sys

lp_path, sol_path = sys.argv[1], sys.argv[2]
text = open(lp_path).read()

def terms(expr):
    found = re.findall(r'([+-]) (\d+) (v\d+_\S+)', expr)
    return [(1 if s == '+' else -1) * int(c) for s, c, _ in found], \
           [v for _, _, v in found]

obj_expr = re.search(r'Minimize\n obj:(.*?)\nSubject To', text, re.S).group(1)
obj_coeffs, obj_vars = terms(obj_expr)
rows = []
body = re.search(r'Subject To\n(.*?)\nBinary', text, re.S).group(1)
for line in body.strip('\n').splitlines():
    expr, rel, rhs = re.match(r' ?\S+:(.*) (<=|>=|=) (-?\d+)$', line).groups()
    coeffs, variables = terms(expr)
    rows.append((list(zip(variables, coeffs)), rel, int(rhs)))
variables = sorted({v for line in [obj_vars] + [[v for v, _ in r[0]] for r in rows]
                    for v in line}, key=lambda n: int(n[1:].split('_')[0]))
if len(variables) > 24:
    sys.exit("stub backend only brute-forces up to 24 variables")
cost = dict(zip(obj_vars, obj_coeffs))
best = None
for bits in itertools.product([0, 1], repeat=len(variables)):
    x = dict(zip(variables, bits))
    ok = True
    for coeffs, rel, rhs in rows:
        lhs = sum(c * x[v] for v, c in coeffs)
        if (rel == '<=' and lhs > rhs) or (rel == '>=' and lhs < rhs) or (rel == '=' and lhs != rhs):
            ok = False
            break
    if ok:
        value = sum(cost.get(v, 0) * x[v] for v in variables)
        if best is None or value < best[0]:
            best = (value, x)
with open(sol_path, 'w') as f:
    if best is None:
        f.write("status infeasible\n")
    else:
        f.write("status optimal\n")
        for v, bit in best[1].items():
            if bit:
                f.write(f"{v} 1\n")
"#;

#[test]
fn external_backend_matches_builtin() {
    let dir = workdir("stub-backend");
    // Tiny hand-sized instance so the stub's brute force stays within cap.
    let instance = dir.path().join("tiny.json");
    let generated = run(&[
        "generate",
        "--output",
        instance.to_str().unwrap(),
        "--seed",
        "2",
        "--auditors",
        "2",
        "--engagements",
        "1",
        "--phases",
        "1",
        "--levels",
        "1",
        "--indices",
        "2",
        "--days",
        "6",
        "--window-density",
        "0.5",
        "--scarcity",
        "0.2",
        "--mocks",
        "0",
    ]);
    assert_code(&generated, 0);

    let stub = dir.path().join("stub-backend.py");
    std::fs::write(&stub, STUB_BACKEND).unwrap();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        std::fs::set_permissions(&stub, std::fs::Permissions::from_mode(0o755)).unwrap();
    }

    let builtin_out = dir.path().join("builtin.json");
    assert_code(
        &run(&[
            "solve",
            instance.to_str().unwrap(),
            "--output",
            builtin_out.to_str().unwrap(),
        ]),
        0,
    );
    let external_out = dir.path().join("external.json");
    let external = run(&[
        "solve",
        instance.to_str().unwrap(),
        "--output",
        external_out.to_str().unwrap(),
        "--backend",
        stub.to_str().unwrap(),
    ]);
    assert_code(&external, 0);

    let objective = |path: &Path| -> serde_json::Value {
        let doc: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        doc["schedule"]["objective"]["total"].clone()
    };
    assert_eq!(objective(&builtin_out), objective(&external_out));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&external_out).unwrap()).unwrap();
    assert_eq!(doc["provenance"]["backend"], stub.to_str().unwrap());
}

#[test]
fn solved_document_round_trips_through_gantt_and_update() {
    let dir = workdir("roundtrip");
    let instance = generate_small(dir.path(), 13);
    let schedule = dir.path().join("schedule.json");
    assert_code(
        &run(&[
            "solve",
            instance.to_str().unwrap(),
            "--output",
            schedule.to_str().unwrap(),
            "--edges-out",
            dir.path().join("edges.json").to_str().unwrap(),
            "--lp-out",
            dir.path().join("model.lp").to_str().unwrap(),
        ]),
        0,
    );
    assert!(dir.path().join("edges.json").exists());
    let lp = std::fs::read_to_string(dir.path().join("model.lp")).unwrap();
    assert!(lp.starts_with("\\ auditsched binary program"));

    // A schedule document solved by the CLI must load back for rendering.
    let chart = run(&[
        "gantt",
        instance.to_str().unwrap(),
        "--schedule",
        schedule.to_str().unwrap(),
    ]);
    assert_code(&chart, 0);
}
