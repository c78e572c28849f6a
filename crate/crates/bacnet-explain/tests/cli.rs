//! Black-box tests of the `bacnet-explain` binary: subcommand behaviour,
//! output shapes, and the exit-code contract.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bacnet_explain::samples;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bacnet-explain"))
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn write_fixtures(dir: &Path) -> (PathBuf, PathBuf) {
    let pcap = dir.join("evaluation.pcap");
    std::fs::write(&pcap, samples::evaluation_capture()).unwrap();

    let corpus = dir.join("corpus");
    std::fs::create_dir_all(&corpus).unwrap();
    std::fs::write(corpus.join("handbook.md"), samples::corpus_markdown()).unwrap();

    let registry = dir.join("devices.json");
    std::fs::write(&registry, samples::DEVICE_REGISTRY_JSON).unwrap();

    let kb = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/service_kb.json");
    let config = serde_json::json!({
        "registry_path": registry,
        "service_kb_path": kb,
        "index_path": dir.join("handbook.psix"),
        "embedding": {"provider": "hashed-bow", "dimension": 96},
        "mode": "m4",
    });
    let config_path = dir.join("config.json");
    std::fs::write(&config_path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    (pcap, config_path)
}

#[test]
fn decode_prints_the_golden_service_line() {
    let dir = tempfile::tempdir().unwrap();
    let pcap = dir.path().join("wpm.pcap");
    std::fs::write(&pcap, samples::write_property_multiple_capture()).unwrap();

    let output = binary().arg("decode").arg(&pcap).output().unwrap();
    assert!(output.status.success(), "stderr: {}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("writePropertyMultiple (16)"));
    assert!(text.contains("Present Value (real): 100"));
}

#[test]
fn decode_of_an_empty_capture_is_just_the_header() {
    let dir = tempfile::tempdir().unwrap();
    let pcap = dir.path().join("empty.pcap");
    std::fs::write(&pcap, samples::pcap_file(&[])).unwrap();

    let output = binary().arg("decode").arg(&pcap).output().unwrap();
    assert!(output.status.success());
    assert_eq!(stdout(&output), "Packet:\n");
}

#[test]
fn decode_of_a_non_pcap_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bogus = dir.path().join("notes.txt");
    std::fs::write(&bogus, b"this is not a capture").unwrap();

    let output = binary().arg("decode").arg(&bogus).output().unwrap();
    assert_eq!(output.status.code(), Some(2), "stderr: {}", stderr(&output));
    assert!(stderr(&output).contains("unsupported capture format"));
}

#[test]
fn kb_build_then_explain_with_the_stub_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (pcap, config) = write_fixtures(dir.path());

    let output = binary()
        .arg("kb-build")
        .arg(dir.path().join("corpus"))
        .arg("--config")
        .arg(&config)
        .output()
        .unwrap();
    assert!(output.status.success(), "stderr: {}", stderr(&output));
    assert!(stdout(&output).contains("dimension 96"));
    assert!(dir.path().join("handbook.psix").exists());

    let run = || {
        let output = binary()
            .arg("explain")
            .arg(&pcap)
            .arg("--config")
            .arg(&config)
            .arg("--stub-llm")
            .output()
            .unwrap();
        assert!(output.status.success(), "stderr: {}", stderr(&output));
        stdout(&output)
    };
    let first = run();
    let second = run();
    assert!(!first.trim().is_empty());
    assert_eq!(first, second);

    let audit_path = dir.path().join("evaluation.pcap.audit.json");
    assert!(audit_path.exists(), "audit record beside the input");
    let audit: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&audit_path).unwrap()).unwrap();
    assert_eq!(audit["schema_version"], 1);
    assert_eq!(audit["mode"], "m4");
    assert_eq!(audit["frames_bacnet"], 19);
    assert!(audit["bundle"]["items"].as_array().unwrap().len() > 0);
    assert_eq!(audit["input_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(audit["decode_status"].as_array().unwrap().len(), 19);
}

#[test]
fn explain_m4_without_an_index_is_a_config_error_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let pcap = dir.path().join("evaluation.pcap");
    std::fs::write(&pcap, samples::evaluation_capture()).unwrap();

    let output = binary()
        .arg("explain")
        .arg(&pcap)
        .arg("--mode")
        .arg("m4")
        .arg("--stub-llm")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1), "stderr: {}", stderr(&output));
    assert!(stderr(&output).contains("requires index_path"));
}

#[test]
fn explain_m1_needs_no_context_sources() {
    let dir = tempfile::tempdir().unwrap();
    let pcap = dir.path().join("evaluation.pcap");
    std::fs::write(&pcap, samples::evaluation_capture()).unwrap();

    let output = binary()
        .arg("explain")
        .arg(&pcap)
        .arg("--mode")
        .arg("m1")
        .arg("--stub-llm")
        .output()
        .unwrap();
    assert!(output.status.success(), "stderr: {}", stderr(&output));
    assert!(stdout(&output).starts_with("Context: (none)"));
}

#[test]
fn explain_against_an_unreachable_endpoint_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let pcap = dir.path().join("evaluation.pcap");
    std::fs::write(&pcap, samples::evaluation_capture()).unwrap();
    let config = serde_json::json!({
        "mode": "m1",
        "llm": {
            "endpoint": "http://127.0.0.1:9/v1/chat/completions",
            "model": "m",
            "retries": 1,
            "retry_backoff_ms": 1,
            "timeout_secs": 2,
        },
    });
    let config_path = dir.path().join("config.json");
    std::fs::write(&config_path, config.to_string()).unwrap();

    let output = binary()
        .arg("explain")
        .arg(&pcap)
        .arg("--config")
        .arg(&config_path)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3), "stderr: {}", stderr(&output));
    // The partial audit names the failing stage.
    let audit: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("evaluation.pcap.audit.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(audit["failure"]["stage"], "summarize");
}

#[test]
fn explain_out_flag_writes_summary_and_audit_beside_it() {
    let dir = tempfile::tempdir().unwrap();
    let pcap = dir.path().join("pair.pcap");
    std::fs::write(&pcap, samples::write_property_error_capture()).unwrap();
    let out = dir.path().join("summary.txt");

    let output = binary()
        .arg("explain")
        .arg(&pcap)
        .arg("--mode")
        .arg("m1")
        .arg("--budget")
        .arg("500")
        .arg("--out")
        .arg(&out)
        .arg("--stub-llm")
        .output()
        .unwrap();
    assert!(output.status.success(), "stderr: {}", stderr(&output));
    assert!(out.exists());
    assert!(dir.path().join("summary.audit.json").exists());
}

#[test]
fn eval_renders_the_score_table_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("ratings.csv");
    std::fs::write(&csv, samples::table_one_ratings_csv()).unwrap();

    let output = binary().arg("eval").arg(&csv).output().unwrap();
    assert!(output.status.success());
    let table = stdout(&output);
    assert!(table.contains("m4"));
    assert!(table.contains("3.63"));
    assert!(table.contains("4.89"));

    let output = binary().arg("eval").arg(&csv).arg("--json").output().unwrap();
    assert!(output.status.success());
    let parsed: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    assert_eq!(parsed.as_array().unwrap().len(), 4);
}

#[test]
fn eval_of_a_malformed_csv_names_the_row_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    std::fs::write(
        &csv,
        "packet_file_id,method,rater_id,ca,ci\np1,m1,r1,9,3\n",
    )
    .unwrap();

    let output = binary().arg("eval").arg(&csv).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr(&output).contains("row 2"));
}

#[test]
fn unknown_mode_is_a_usage_error_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let pcap = dir.path().join("x.pcap");
    std::fs::write(&pcap, samples::pcap_file(&[])).unwrap();

    let output = binary()
        .arg("explain")
        .arg(&pcap)
        .arg("--mode")
        .arg("m7")
        .arg("--stub-llm")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn missing_subcommand_is_a_usage_error_exit_1() {
    let output = binary().output().unwrap();
    assert_eq!(output.status.code(), Some(1));
}
