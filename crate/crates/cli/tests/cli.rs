use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn ooheap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ooheap")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn path(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn verified_file_exits_zero() {
    let out = ooheap(&["verify", path(&corpus("append.oc"))]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains("verified"));
}

#[test]
fn refuted_file_exits_one() {
    let out = ooheap(&["verify", path(&corpus("ex1_memory_leak.oc"))]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("MemoryLeak"));
}

#[test]
fn inconclusive_file_exits_three() {
    let out = ooheap(&["verify", path(&corpus("ex4_cycle.oc"))]);
    assert_eq!(code(&out), 3, "{}", stdout(&out));
}

#[test]
fn refutation_dominates_across_files() {
    let out = ooheap(&["verify", path(&corpus("ex4_cycle.oc")), path(&corpus("ex3_invalid_access.oc"))]);
    assert_eq!(code(&out), 1);
}

#[test]
fn missing_file_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = ooheap(&["verify", path(&dir.path().join("absent.oc"))]);
    assert_eq!(code(&out), 2);
    assert!(!out.stderr.is_empty());
}

#[test]
fn parse_error_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.oc");
    std::fs::write(&file, "void f( {").unwrap();
    let out = ooheap(&["verify", path(&file)]);
    assert_eq!(code(&out), 2);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&ooheap(&[])), 2);
    assert_eq!(code(&ooheap(&["bogus"])), 2);
    assert_eq!(code(&ooheap(&["verify"])), 2);
    assert_eq!(code(&ooheap(&["--unfold-depth", "0", "verify", path(&corpus("empty.oc"))])), 2);
}

#[test]
fn empty_file_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("nothing.oc");
    std::fs::write(&file, "").unwrap();
    assert_eq!(code(&ooheap(&["verify", path(&file)])), 0);
}

#[test]
fn term_path_agrees_with_source_path() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["append.oc", "ex1_memory_leak.oc", "ex2_unreachable.oc", "ex4_cycle.oc", "list_ops.oc"] {
        let src = corpus(name);
        let term = dir.path().join(name.replace(".oc", ".plt"));
        let emitted = ooheap(&["emit-term", path(&src), "-o", path(&term)]);
        assert_eq!(code(&emitted), 0, "{name}");
        let direct = ooheap(&["--format", "json", "verify", path(&src)]);
        let via_term = ooheap(&["--format", "json", "verify-term", path(&term)]);
        assert_eq!(code(&direct), code(&via_term), "{name}");
        let statuses = |o: &Output| -> Vec<String> {
            let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
            v[0]["functions"].as_array().unwrap().iter().map(|f| f["status"].to_string()).collect()
        };
        assert_eq!(statuses(&direct), statuses(&via_term), "{name}");
    }
}

#[test]
fn emit_term_to_stdout() {
    let out = ooheap(&["emit-term", path(&corpus("worked_example.oc"))]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("function(f, int,"), "{}", stdout(&out));
}

#[test]
fn json_output_is_deterministic() {
    let file = corpus("list_ops.oc");
    let args = ["--format", "json", "verify", path(&file)];
    let first = ooheap(&args);
    let second = ooheap(&args);
    assert_eq!(first.stdout, second.stdout);
    let parsed: serde_json::Value = serde_json::from_slice(&first.stdout).expect("valid json");
    assert!(parsed.is_array());
}

#[test]
fn run_reports_out_of_fuel() {
    let out = ooheap(&["run", "--fuel", "1000", path(&corpus("ex4_cycle.oc"))]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("OutOfFuel"));
}

#[test]
fn entail_reports_each_query() {
    let out = ooheap(&["entail", path(&corpus("queries.q"))]);
    assert_eq!(code(&out), 1);
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 4);
    assert_eq!(text.matches(": proved").count(), 3);
    assert_eq!(text.matches(": failed").count(), 1);
}

#[test]
fn emit_proof_writes_dot_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let proofs = dir.path().join("proofs");
    let out = ooheap(&["verify", path(&corpus("append.oc")), "--emit-proof", path(&proofs)]);
    assert_eq!(code(&out), 0);
    let mut names: Vec<String> =
        std::fs::read_dir(&proofs).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    names.sort();
    assert!(names.iter().any(|n| n.ends_with(".dot")), "{names:?}");
    assert!(names.iter().any(|n| n.ends_with(".pt.json")), "{names:?}");
    for n in names.iter().filter(|n| n.ends_with(".dot")) {
        let dot = std::fs::read_to_string(proofs.join(n)).unwrap();
        assert!(dot.trim_start().starts_with("digraph"), "{n}");
    }
    for n in names.iter().filter(|n| n.ends_with(".pt.json")) {
        let json = std::fs::read_to_string(proofs.join(n)).unwrap();
        serde_json::from_str::<serde_json::Value>(&json).expect("valid json");
    }
}
