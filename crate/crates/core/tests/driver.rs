use std::path::PathBuf;

use testforge::driver::{run_loop, Campaign, CampaignConfig, DriverError};

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn config(runner: Vec<String>, iterations: u64, seed: u64) -> CampaignConfig {
    let mut cfg = CampaignConfig::minimal(runner, vec![golden("simple.json")]);
    cfg.iterations = iterations;
    cfg.seed = seed;
    cfg
}

fn echo() -> Vec<String> {
    vec![env!("CARGO_BIN_EXE_echo_runner").to_string()]
}

fn sh(script: &str) -> Vec<String> {
    vec!["sh".into(), "-c".into(), script.into()]
}

#[test]
fn zero_iterations_runs_nothing() {
    let cfg = config(sh("exit 1"), 0, 1);
    let mut c = Campaign::from_config(&cfg).unwrap();
    let r = c.run().unwrap();
    assert_eq!(r.executions, 0);
    assert!(c.events().is_empty());
    assert!(c.corpus().is_empty());
}

#[test]
fn one_event_per_iteration() {
    let cfg = config(echo(), 200, 3);
    let mut c = Campaign::from_config(&cfg).unwrap();
    let r = c.run().unwrap();
    assert_eq!(r.executions, 200);
    assert_eq!(c.events().len(), 200);
    assert_eq!(r.per_strategy.values().sum::<u64>(), 200);
    assert!(r.adds > 0 && r.adds as usize == c.corpus().len());
    assert_eq!(r.crashes, 0);
}

#[test]
fn same_seed_same_event_log() {
    let logs: Vec<String> = (0..2)
        .map(|_| {
            let mut c = Campaign::from_config(&config(echo(), 300, 42)).unwrap();
            c.run().unwrap();
            c.event_log()
        })
        .collect();
    assert_eq!(logs[0], logs[1]);
    let mut other = Campaign::from_config(&config(echo(), 300, 43)).unwrap();
    other.run().unwrap();
    assert_ne!(other.event_log(), logs[0]);
}

#[test]
fn empty_coverage_admits_nothing() {
    let cfg = config(sh("while read l; do echo '{\"status\":\"ok\",\"coverage\":[]}'; done"), 50, 1);
    let mut c = Campaign::from_config(&cfg).unwrap();
    let r = c.run().unwrap();
    assert_eq!(r.executions, 50);
    assert_eq!(r.adds, 0);
}

#[test]
fn malformed_response_aborts() {
    let cfg = config(sh("while read l; do echo nope; done"), 10, 1);
    let err = Campaign::from_config(&cfg).unwrap().run().unwrap_err();
    assert!(matches!(err, DriverError::RunnerProtocolError(_)), "{err}");
}

#[test]
fn dying_runner_is_a_crash_loop() {
    let mut cfg = config(sh("read l; exit 3"), 10, 1);
    cfg.crash_loop_limit = 3;
    let err = Campaign::from_config(&cfg).unwrap().run().unwrap_err();
    assert!(matches!(err, DriverError::RunnerCrashLoop { failures: 3, .. }), "{err}");
}

#[test]
fn missing_runner_binary_fails() {
    let cfg = config(vec!["/nonexistent/runner".into()], 5, 1);
    let err = Campaign::from_config(&cfg).unwrap().run().unwrap_err();
    assert!(matches!(err, DriverError::RunnerCrashLoop { .. }));
}

#[test]
fn hanging_runner_times_out() {
    let mut cfg = config(sh("while read l; do sleep 5; done"), 2, 1);
    cfg.exec_timeout_ms = 100;
    let mut c = Campaign::from_config(&cfg).unwrap();
    let r = c.run().unwrap();
    assert_eq!(r.timeouts, 2);
    assert_eq!(r.crashes, 0);
    assert!(c.events()[0].contains("\"timeout\""));

    cfg.timeout_is_crash = true;
    assert_eq!(Campaign::from_config(&cfg).unwrap().run().unwrap().crashes, 2);
    cfg.stop_on_crash = true;
    let r = Campaign::from_config(&cfg).unwrap().run().unwrap();
    assert_eq!((r.executions, r.first_crash_iteration), (1, Some(0)));
}

#[test]
fn toy_bug_found_with_dictionary() {
    let dir = tempfile::tempdir().unwrap();
    let dict = dir.path().join("bug.dict");
    std::fs::write(&dict, "BUG\n").unwrap();
    let candidates = dir.path().join("cands.json");
    std::fs::write(
        &candidates,
        r#"[{"id": "toy", "vulnerable_lines": [["toy.c", 13]], "key_lines": [["toy.c", 11], ["toy.c", 12]]}]"#,
    )
    .unwrap();
    let mut cfg = config(vec![env!("CARGO_BIN_EXE_toy_bug_runner").to_string()], 2000, 9);
    cfg.dictionary = Some(dict);
    cfg.candidates = Some(candidates);
    cfg.corpus_dir = Some(dir.path().join("corpus"));
    cfg.event_log = Some(dir.path().join("events.jsonl"));
    let r = run_loop(&cfg).unwrap();
    assert!(r.first_crash_iteration.is_some(), "{r:?}");
    assert_eq!(r.triggered, vec!["toy".to_string()]);
    let log = std::fs::read_to_string(dir.path().join("events.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 2000);
    assert!(dir.path().join("corpus/testlang").is_dir() || dir.path().join("corpus/external").is_dir());
}

#[test]
fn config_from_toml_resolves_paths() {
    let cfg = CampaignConfig::from_toml(
        "runner = [\"r\"]\ndocs = [\"a.json\"]\niterations = 7\ndialect = \"jazzer\"\n[scheduler]\np_uniform = 0.5\n",
        std::path::Path::new("/base"),
    )
    .unwrap();
    assert_eq!(cfg.docs, vec![PathBuf::from("/base/a.json")]);
    assert_eq!(cfg.iterations, 7);
    assert_eq!(cfg.scheduler.p_uniform, 0.5);
    assert!(CampaignConfig::from_toml("runner=[\"r\"]\ndocs=[\"a\"]\np_gen=2.0\n", std::path::Path::new("/")).is_err());
    assert!(CampaignConfig::from_toml("runner=[\"r\"]\ndocs=[]\n", std::path::Path::new("/")).is_err());
    assert!(CampaignConfig::from_toml("runner=[\"r\"]\ndocs=[\"a\"]\nbogus=1\n", std::path::Path::new("/")).is_err());
}
