use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden").join(name)
}

fn testforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_testforge")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn validate_exit_codes() {
    let ok = testforge(&["validate", golden("simple.json").to_str().unwrap()]);
    assert_eq!(code(&ok), 0, "{ok:?}");
    assert!(stdout(&ok).starts_with("ok "));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"records": [{"name": "INPUT", "fields": [{"name": "d", "kind": "bytes", "size": {"ref": "nope"}}]}]}"#,
    )
    .unwrap();
    let out = testforge(&["validate", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("error["), "{}", stdout(&out));

    std::fs::write(&bad, "{").unwrap();
    assert_eq!(code(&testforge(&["validate", bad.to_str().unwrap()])), 1);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&testforge(&[])), 2);
    assert_eq!(code(&testforge(&["generate"])), 2);
    assert_eq!(code(&testforge(&["encode", "--dialect", "rust", "--calls", "x"])), 2);
}

#[test]
fn merge_prints_canonical_doc() {
    let out = testforge(&[
        "merge",
        golden("base.json").to_str().unwrap(),
        golden("partial.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let merged = testforge::parse_testlang(&stdout(&out)).unwrap();
    let want = testforge::parse_testlang(&std::fs::read_to_string(golden("merged.json")).unwrap()).unwrap();
    assert_eq!(merged, want);

    let wrong = testforge(&[
        "merge",
        golden("partial.json").to_str().unwrap(),
        golden("base.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&wrong), 1);
}

#[test]
fn generate_is_deterministic_and_checkable() {
    let doc = golden("simple.json");
    let args = ["generate", "--doc", doc.to_str().unwrap(), "--seed", "7", "--count", "3"];
    let a = testforge(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(stdout(&a), stdout(&testforge(&args)));
    let d = testforge::parse_testlang(&std::fs::read_to_string(&doc).unwrap()).unwrap();
    let lines: Vec<_> = stdout(&a).lines().map(|l| hex::decode(l).unwrap()).collect();
    assert_eq!(lines.len(), 3);
    for blob in &lines {
        testforge::structure_check(&d, blob).unwrap();
    }

    let dir = tempfile::tempdir().unwrap();
    let out = testforge(&[
        "generate",
        "--doc",
        doc.to_str().unwrap(),
        "--mode",
        "crash",
        "--count",
        "2",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    for i in 0..2 {
        let blob = std::fs::read(dir.path().join(format!("{i}.bin"))).unwrap();
        assert!(testforge::structure_check(&d, &blob).is_err());
    }
}

#[test]
fn encode_call_list() {
    let dir = tempfile::tempdir().unwrap();
    let calls = dir.path().join("calls.json");
    std::fs::write(
        &calls,
        r#"[{"op": "int_in_range", "type": "u8", "min": 0, "max": 255, "value": 65}]"#,
    )
    .unwrap();
    let out = testforge(&["encode", "--dialect", "jazzer", "--calls", calls.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(out.stdout, vec![0x41]);

    std::fs::write(&calls, r#"[{"op": "bool", "value": 3}]"#).unwrap();
    assert_eq!(code(&testforge(&["encode", "--calls", calls.to_str().unwrap()])), 1);
}

#[test]
fn mutate_with_dictionary() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.bin");
    std::fs::write(&input, b"hello world").unwrap();
    let dict = dir.path().join("d.dict");
    std::fs::write(&dict, "BUG\n").unwrap();
    let args = [
        "mutate",
        "--in",
        input.to_str().unwrap(),
        "--dict",
        dict.to_str().unwrap(),
        "--seed",
        "3",
    ];
    let a = testforge(&args);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, testforge(&args).stdout);
    assert!(String::from_utf8_lossy(&a.stderr).starts_with("strategy "));

    let missing = testforge(&["mutate", "--in", "/nonexistent/in.bin"]);
    assert_eq!(code(&missing), 1);
}

#[test]
fn run_then_corpus_stats() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("campaign.toml");
    std::fs::write(
        &config,
        format!(
            r#"runner = ["sh", "-c", "while read l; do echo '{{\"status\":\"ok\",\"coverage\":[[\"a.c\",1]]}}'; done"]
docs = ["{}"]
iterations = 20
seed = 5
corpus_dir = "corpus"
event_log = "events.jsonl"
"#,
            golden("simple.json").display()
        ),
    )
    .unwrap();
    let out = testforge(&["run", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["executions"], 20);
    assert_eq!(report["adds"], 1);
    assert_eq!(std::fs::read_to_string(dir.path().join("events.jsonl")).unwrap().lines().count(), 20);

    let stats = testforge(&["corpus", "stats", dir.path().join("corpus").to_str().unwrap()]);
    assert_eq!(code(&stats), 0);
    let text = stdout(&stats);
    assert!(text.contains("entries 1\n") && text.contains("union_coverage 1\n"), "{text}");

    assert_eq!(code(&testforge(&["corpus", "stats", "/nonexistent/dir"])), 1);
    std::fs::write(&config, "runner = []\n").unwrap();
    assert_eq!(code(&testforge(&["run", "--config", config.to_str().unwrap()])), 1);
}
