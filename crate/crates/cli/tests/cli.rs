use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn mtlo(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_mtlo"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("mtlo-cli-{}-{name}", std::process::id()))
}

fn sorted_lines(s: &str) -> Vec<String> {
    let mut v: Vec<String> = s.lines().map(str::to_string).collect();
    v.sort();
    v
}

#[test]
fn monitor_prints_verdicts_from_stdin() {
    let input = "{\"type\":\"action\",\"component\":\"C1\",\"ts\":\"1.0\",\"seq\":1,\"pred\":\"p\"}\n\
                 {\"type\":\"action\",\"component\":\"C1\",\"ts\":\"2.0\",\"seq\":2,\"pred\":\"q\"}\n";
    let out = mtlo(&["monitor", "--expr", "p IMPLIES EVENTUALLY[0,3] q"], input);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).lines().any(|l| l == r#"{"ts":"1.0","verdict":true}"#), "{}", stdout(&out));
}

#[test]
fn shuffled_log_matches_the_reference_evaluator() {
    let log = scratch("log.jsonl");
    let moved = scratch("moved.jsonl");
    let gen = mtlo(&["gen", "--profile", "P2'", "--rate", "10", "--duration", "10", "--seed", "4", "--out", log.to_str().unwrap()], "");
    assert!(gen.status.success());
    let shuffle = mtlo(&["shuffle", "--sigma", "5", "--seed", "9", "--in", log.to_str().unwrap(), "--out", moved.to_str().unwrap()], "");
    assert!(shuffle.status.success());

    let monitored = mtlo(&["monitor", "--policy", "P2'", "--in", moved.to_str().unwrap()], "");
    let pipelined = mtlo(&["monitor", "--policy", "P2'", "--pipelined", "--in", moved.to_str().unwrap()], "");
    let checked = mtlo(&["check", "--policy", "P2'", "--in", log.to_str().unwrap()], "");
    assert!(monitored.status.success() && pipelined.status.success() && checked.status.success());
    let expected = sorted_lines(&stdout(&checked));
    assert!(!expected.is_empty());
    assert_eq!(sorted_lines(&stdout(&monitored)), expected);
    assert_eq!(sorted_lines(&stdout(&pipelined)), expected);

    let compared = mtlo(&["compare", "--policy", "P2'", "--in", moved.to_str().unwrap()], "");
    assert!(compared.status.success());
    assert!(stdout(&compared).contains("0 soundness and 0 completeness violations, 0 errors"));

    let _ = std::fs::remove_file(log);
    let _ = std::fs::remove_file(moved);
}

#[test]
fn bench_writes_one_row_per_configuration() {
    let out = mtlo(&["bench", "--profile", "P1,P3'", "--rates", "5", "--sigmas", "0,2", "--duration", "3"], "");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 5, "{text}");
}

#[test]
fn errors_exit_with_status_two() {
    let out = mtlo(&["monitor", "--expr", "p UNTIL"], "");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let out = mtlo(&["monitor", "--expr", "p"], "not json\n");
    assert_eq!(out.status.code(), Some(2));
}
