//! End-to-end tests of the `chq` binary: exit codes, reason lines, JSON
//! shape, and determinism.

use serde_json::Value;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::{Command, Output};

fn chq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chq"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr_text(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn probability_of(report: &Value, history: &[&str]) -> f64 {
    report["probabilities"]
        .as_array()
        .expect("probabilities present")
        .iter()
        .find(|entry| {
            let labels: Vec<&str> = entry["history"]
                .as_array()
                .unwrap()
                .iter()
                .map(|l| l.as_str().unwrap())
                .collect();
            labels == history
        })
        .expect("history listed")["probability"]
        .as_f64()
        .unwrap()
}

fn scenario(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
        .display()
        .to_string()
}

#[test]
fn mach_zehnder_with_output_splitter_detects_only_dc() {
    let out = chq(&["--json", "demo", "mach-zehnder", "--bs2"]);
    assert_eq!(exit_code(&out), 0, "{}", stderr_text(&out));
    let report = stdout_json(&out);
    assert_eq!(report["report_version"], 1);
    assert_eq!(report["consistency"]["consistent"], true);
    assert!((probability_of(&report, &["any", "Dc"]) - 1.0).abs() < 1e-9);
    assert!(probability_of(&report, &["any", "Dd"]).abs() < 1e-9);
}

#[test]
fn which_path_question_fails_with_the_inconsistency_reason() {
    let out = chq(&[
        "--json",
        "demo",
        "mach-zehnder",
        "--bs2",
        "--intermediate",
        "which_path",
    ]);
    assert_eq!(exit_code(&out), 1);
    assert!(
        stderr_text(&out).contains("inconsistent-family max_offdiag="),
        "stderr: {}",
        stderr_text(&out)
    );
    let report = stdout_json(&out);
    assert_eq!(report["consistency"]["consistent"], false);
    let max_offdiag = report["consistency"]["max_offdiag"].as_f64().unwrap();
    assert!((max_offdiag - 0.25).abs() < 1e-9);
    assert!(report["probabilities"].is_null());
}

#[test]
fn beamsplitter_rates_are_the_squared_amplitudes() {
    let out = chq(&[
        "--json",
        "demo",
        "beamsplitter",
        "--alpha",
        "0.6",
        "--beta",
        "0.8i",
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr_text(&out));
    let report = stdout_json(&out);
    assert!((probability_of(&report, &["path=a", "Da"]) - 0.36).abs() < 1e-9);
    assert!((probability_of(&report, &["path=b", "Db"]) - 0.64).abs() < 1e-9);
}

#[test]
fn json_reports_are_byte_identical_across_runs() {
    let args = ["--json", "--seed", "7", "demo", "eprb"];
    let first = chq(&args);
    let second = chq(&args);
    assert_eq!(exit_code(&first), 0);
    assert_eq!(first.stdout, second.stdout);
    assert!(!first.stdout.is_empty());
}

#[test]
fn seed_is_echoed_into_the_report() {
    let out = chq(&["--json", "--seed", "42", "demo", "charlie"]);
    let report = stdout_json(&out);
    assert_eq!(report["seed"], 42);
    let out = chq(&["--json", "demo", "charlie"]);
    assert!(stdout_json(&out)["seed"].is_null());
}

#[test]
fn scenario_file_errors_exit_2_with_a_position() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "space 2").unwrap();
    write!(file, "ket k = [1,").unwrap();
    file.flush().unwrap();
    let path = file.path().display().to_string();
    let out = chq(&["check", &path]);
    assert_eq!(exit_code(&out), 2);
    assert!(
        stderr_text(&out).contains("parse-error 2:9: unterminated matrix literal"),
        "stderr: {}",
        stderr_text(&out)
    );
}

#[test]
fn missing_file_exits_2() {
    let out = chq(&["probs", "/no/such/scenario.chq"]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr_text(&out).starts_with("io-error"));
}

#[test]
fn usage_errors_exit_3() {
    let out = chq(&["demo", "beamsplitter", "--alpha", "2", "--beta", "0"]);
    assert_eq!(exit_code(&out), 3);
    assert!(stderr_text(&out).starts_with("usage-error"));

    let out = chq(&["--eps", "0.5", "demo", "charlie"]);
    assert_eq!(exit_code(&out), 3);
    assert!(stderr_text(&out).starts_with("usage-error"));

    let out = chq(&["--threshold", "1.5", "demo", "charlie"]);
    assert_eq!(exit_code(&out), 3);

    let out = chq(&["demo", "eprb", "--intervene-axis", "x"]);
    assert_eq!(exit_code(&out), 3);

    let out = chq(&["no-such-command"]);
    assert_eq!(exit_code(&out), 3);

    let out = chq(&[]);
    assert_eq!(exit_code(&out), 3);
}

#[test]
fn help_and_version_exit_0() {
    let out = chq(&["--help"]);
    assert_eq!(exit_code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("chq"));

    let out = chq(&["--version"]);
    assert_eq!(exit_code(&out), 0);

    let out = chq(&["demo", "--help"]);
    assert_eq!(exit_code(&out), 0);
}

#[test]
fn check_reports_inconsistent_families_without_failing() {
    let path = scenario("which_path.chq");
    let out = chq(&["check", &path]);
    assert_eq!(exit_code(&out), 0, "{}", stderr_text(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("consistent: no"));

    let out = chq(&["probs", &path]);
    assert_eq!(exit_code(&out), 1);
    assert!(stderr_text(&out).contains("inconsistent-family"));
}

#[test]
fn shipped_scenarios_answer_their_queries() {
    let out = chq(&["--json", "probs", &scenario("interference.chq")]);
    assert_eq!(exit_code(&out), 0, "{}", stderr_text(&out));
    let report = stdout_json(&out);
    assert!((probability_of(&report, &["any", "b0"]) - 1.0).abs() < 1e-9);

    let out = chq(&["--json", "causes", &scenario("relay.chq")]);
    assert_eq!(exit_code(&out), 0, "{}", stderr_text(&out));
    let report = stdout_json(&out);
    assert_eq!(report["verdicts"][0]["classification"], "cause");
    assert_eq!(report["verdicts"][0]["p_g_given_f"], 1.0);

    let out = chq(&["--json", "compare", &scenario("relay.chq")]);
    assert_eq!(exit_code(&out), 0, "{}", stderr_text(&out));
    let report = stdout_json(&out);
    assert_eq!(report["comparisons"][0]["changed"], true);
    assert_eq!(report["comparisons"][0]["base_conditional"], 1.0);
    assert_eq!(report["comparisons"][0]["intervened_conditional"], 0.0);

    let out = chq(&["--json", "causes", &scenario("common_cause.chq")]);
    assert_eq!(exit_code(&out), 0, "{}", stderr_text(&out));
    let report = stdout_json(&out);
    let candidates = report["common_causes"][0]["candidates"].as_array().unwrap();
    assert_eq!(candidates.len(), 1);
    assert_eq!(candidates[0]["event"], "s1");
    assert_eq!(candidates[0]["time"], "t1");
}

#[test]
fn compare_without_an_intervened_family_exits_2() {
    let out = chq(&["compare", &scenario("interference.chq")]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr_text(&out).starts_with("no-intervened"));
}
