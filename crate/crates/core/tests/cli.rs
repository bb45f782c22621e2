//! Runs the `shipwake` binary as a user would.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn shipwake(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shipwake"))
        .args(args)
        .env_remove("SHIPWAKE_SEED")
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn synth_short(dir: &Path, frames: usize) {
    let out = shipwake(&[
        "synth",
        &format!("--io.output={}", dir.display()),
        &format!("--synth.frames={frames}"),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
}

#[test]
fn unknown_key_exits_with_config_status() {
    let out = shipwake(&["detect", "--model.nonsense=3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("model.nonsense"));
}

#[test]
fn unknown_key_in_config_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "model.r1 = 8\ntracker.speed = 2\n").unwrap();
    let out = shipwake(&["detect", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("tracker.speed"));
}

#[test]
fn warm_up_only_sequence_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("scene");
    synth_short(&scene, 20);
    let run = dir.path().join("run");
    let out = shipwake(&[
        "detect",
        &format!("--io.input={}", scene.join("frames").display()),
        &format!("--io.output={}", run.display()),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(fs::read_to_string(run.join("detections.jsonl")).unwrap(), "");
    assert_eq!(fs::read_dir(run.join("masks")).unwrap().count(), 0);
}

#[test]
fn missing_input_names_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let out = shipwake(&[
        "detect",
        &format!("--io.input={}", dir.path().join("absent").display()),
        &format!("--io.output={}", dir.path().join("run").display()),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("open input"), "{}", stderr(&out));
}

#[test]
fn missing_ground_truth_fails_eval() {
    let dir = tempfile::tempdir().unwrap();
    let out = shipwake(&[
        "eval",
        &format!("--io.truth={}", dir.path().join("absent.jsonl").display()),
        &format!("--io.output={}", dir.path().display()),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("read ground truth"), "{}", stderr(&out));
}

#[test]
fn truth_scored_against_itself_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    synth_short(dir.path(), 30);
    let truth = dir.path().join("truth.jsonl");
    let report = dir.path().join("report.txt");
    let out = shipwake(&[
        "eval",
        &format!("--io.truth={}", truth.display()),
        &format!("--io.detections={}", truth.display()),
        &format!("--io.output={}", dir.path().display()),
        &format!("--io.report={}", report.display()),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(&report).unwrap();
    assert!(text.contains("VF  1.0000 (100.00%, truncated 100%)"), "{text}");
    assert!(dir.path().join("report.json").exists());
}

#[test]
fn detect_writes_stages_annotations_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("scene");
    synth_short(&scene, 23);
    let run = dir.path().join("run");
    let out = Command::new(env!("CARGO_BIN_EXE_shipwake"))
        .args([
            "detect",
            "--dump-stages",
            &format!("--io.input={}", scene.join("frames").display()),
            &format!("--io.output={}", run.display()),
            "--io.annotate=true",
        ])
        .env("SHIPWAKE_SEED", "4242")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));

    let records = fs::read_to_string(run.join("detections.jsonl")).unwrap();
    assert_eq!(records.lines().count(), 3);
    assert_eq!(fs::read_dir(run.join("masks")).unwrap().count(), 3);
    assert_eq!(fs::read_dir(run.join("annotated")).unwrap().count(), 3);
    let stages: Vec<String> = fs::read_dir(run.join("stages"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert_eq!(stages.len(), 3 * 8);
    assert!(stages.contains(&"000020_6_distortion.pgm".to_string()));

    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(run.join("run.json")).unwrap()).unwrap();
    assert_eq!(report["rng_seed"], 4242);
    assert_eq!(report["processed"], 3);
}

#[test]
fn bench_reports_both_sizes() {
    let out = shipwake(&["bench", "--bench.frames=22"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("200x150 over 2 frames"), "{text}");
    assert!(text.contains("640x480 over 2 frames"), "{text}");
    assert!(text.contains("latency ratio"));
}
