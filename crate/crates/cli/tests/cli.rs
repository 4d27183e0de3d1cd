use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel)
}

fn invsynth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_invsynth"))
        .args(args)
        .env_remove("INVSYNTH_SMT_DUMP")
        .output()
        .expect("binary runs")
}

fn f(rel: &str) -> String {
    fixture(rel).to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn verify_reports_each_obligation() {
    let o = invsynth(&["verify", &f("walk.c"), "--invariants", &f("walk_refined.inv")]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 9);

    let o = invsynth(&["verify", &f("walk.c"), "--invariants", &f("walk_partial.inv")]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    let failing: Vec<&str> = out.lines().filter(|l| !l.ends_with("Valid")).collect();
    assert_eq!(failing.len(), 1);
    assert!(failing[0].starts_with("PostCondition"));
}

#[test]
fn synthesize_replays_walk() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = invsynth(&[
        "synthesize",
        &f("walk.c"),
        "--replay",
        &f("walk.transcript.jsonl"),
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["outcome"], "Solved");
    assert_eq!(report["classification"], "FeedbackDrivenSuccess");
    assert_eq!(report["feedback_rounds"], 1);
}

#[test]
fn synthesize_budget_and_errors() {
    let o = invsynth(&[
        "synthesize",
        &f("corpus/countdown.c"),
        "--replay",
        &f("corpus/countdown.transcript.jsonl"),
    ]);
    assert_eq!(o.status.code(), Some(2));

    let o = invsynth(&[
        "synthesize",
        &f("walk.c"),
        "--replay",
        &f("walk.transcript.jsonl"),
        "--token-budget",
        "100",
    ]);
    assert_eq!(o.status.code(), Some(2));

    let o = invsynth(&[
        "synthesize",
        &f("corpus/count_up.c"),
        "--replay",
        &f("walk.transcript.jsonl"),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn scripted_run_records_a_replayable_transcript() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.jsonl");
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let o = invsynth(&[
        "synthesize",
        &f("walk.c"),
        "--script",
        &f("walk.replies.json"),
        "--record",
        t.to_str().unwrap(),
        "-o",
        a.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = invsynth(&[
        "synthesize",
        &f("walk.c"),
        "--replay",
        t.to_str().unwrap(),
        "-o",
        b.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn check_proof_finds_the_non_sequitur() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("check.json");
    let o = invsynth(&[
        "check-proof",
        &f("walk.c"),
        "--invariants",
        &f("walk_partial.inv"),
        "--proof",
        &f("walk_formal_proof.txt"),
        "--natural",
        &f("walk_natural_proof.txt"),
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("(j > m) ==> (j == m + 1)"));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["errors"].as_array().unwrap().len(), 1);
    assert_eq!(report["errors"][0]["kind"], "InvalidImplication");
}

#[test]
fn bench_summaries_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for (path, jobs) in [(&a, "1"), (&b, "3")] {
        let o = invsynth(&[
            "bench",
            &f("corpus"),
            "--seed",
            "5",
            "--jobs",
            jobs,
            "--summary",
            path.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains("solved 9/10 programs"));
    }
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn usage_and_input_errors() {
    assert_eq!(invsynth(&["bogus"]).status.code(), Some(64));
    assert_eq!(invsynth(&["verify", &f("walk.c")]).status.code(), Some(64));
    assert_eq!(
        invsynth(&["verify", "/nonexistent.c", "--invariants", &f("walk_refined.inv")]).status.code(),
        Some(66)
    );
    assert_eq!(
        invsynth(&["verify", &f("walk.c"), "--invariants", &f("walk.c")]).status.code(),
        Some(65)
    );
    // Replay and record together make no sense.
    let o = invsynth(&[
        "synthesize",
        &f("walk.c"),
        "--replay",
        &f("walk.transcript.jsonl"),
        "--record",
        "/tmp/x.jsonl",
    ]);
    assert_eq!(o.status.code(), Some(64));
}

#[test]
fn config_errors_exit_78() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "sede = 1\n").unwrap();
    let o = invsynth(&[
        "verify",
        &f("walk.c"),
        "--invariants",
        &f("walk_refined.inv"),
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(78));

    // Live mode without a model is a configuration error, caught before any request.
    let o = invsynth(&["synthesize", &f("walk.c"), "--live"]);
    assert_eq!(o.status.code(), Some(78));
}
