//! Runs the built binary end to end on small synthetic data.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn semff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semff"))
        .args(args)
        .env("FFAGENT_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = semff(args);
    assert!(
        out.status.success(),
        "semff {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Small world with fixed-length videos so uniform skips divide exactly.
fn mini_config(dir: &Path) -> PathBuf {
    let cfg = json!({
        "seed": 3,
        "synthetic": {
            "num_topics": 8, "words_per_topic": 4, "feature_dim": 8, "window": 8,
            "corpus_clips": 40, "frames": [240, 240], "background_block": [10, 40]
        },
        "splits": { "train_videos": 4, "test_videos": 3 },
        "encoder": {
            "word_dim": 8, "sentence_hidden": 6, "feature_dim": 8, "document_hidden": 8,
            "word_attention": 6, "sentence_attention": 6, "projection_hidden": 12, "embed_dim": 8
        },
        "encoder_train": { "epochs": 2 },
        "agent": { "embed_dim": 8, "position_dim": 16, "hidden": [16] },
        "agent_train": { "epochs": 2 }
    });
    let path = dir.join("config.json");
    fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    path
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn eval_op_prints_the_table_value() {
    let out = ok(&["eval", "op", "--f1", "17.86", "--os", "11.68", "--sstar", "12"]);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "30.07");
}

#[test]
fn print_defaults_round_trips_through_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["config", "print-defaults"]);
    let path = dir.path().join("defaults.json");
    fs::write(&path, &out.stdout).unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["agent_train"]["gamma"], json!(0.99));
    ok(&["--config", p(&path), "config", "print-defaults"]);
}

#[test]
fn synth_is_deterministic_and_honors_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = mini_config(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        ok(&["--config", p(&cfg), "--seed", "7", "synth", "--out", p(out), "--videos", "20"]);
    }
    let train = read_json(&a.join("train/manifest.json"));
    assert_eq!(train["videos"].as_array().unwrap().len(), 20);
    for rel in ["corpus.json", "train/manifest.json", "test/manifest.json", "train/train-0000.f32"] {
        assert_eq!(fs::read(a.join(rel)).unwrap(), fs::read(b.join(rel)).unwrap(), "{rel}");
    }
}

#[test]
fn bad_config_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, r#"{"agent_train": {"gamma": 1.5}}"#).unwrap();
    let out = semff(&["--config", p(&path), "synth", "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    fs::write(&path, r#"{"no_such_key": 1}"#).unwrap();
    let out = semff(&["--config", p(&path), "synth", "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn missing_blob_exits_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = mini_config(dir.path());
    ok(&["--config", p(&cfg), "synth", "--out", p(dir.path())]);
    fs::remove_file(dir.path().join("test/test-0000.f32")).unwrap();
    let out = semff(&[
        "eval",
        "--dataset",
        p(&dir.path().join("test/manifest.json")),
        "--selections",
        p(dir.path()),
        "--out",
        p(&dir.path().join("r")),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn uniform_selections_report_their_exact_speedup() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = mini_config(dir.path());
    ok(&["--config", p(&cfg), "synth", "--out", p(dir.path())]);
    let manifest = dir.path().join("test/manifest.json");
    let sels = dir.path().join("uniform");
    fs::create_dir(&sels).unwrap();
    for v in read_json(&manifest)["videos"].as_array().unwrap() {
        let id = v["id"].as_str().unwrap();
        let frames: Vec<usize> = (1..=240).step_by(12).collect();
        let s = json!({"video_id": id, "s_star": 12, "selected_frames": frames, "os": 12.0});
        fs::write(sels.join(format!("{id}.json")), s.to_string()).unwrap();
    }
    let prefix = dir.path().join("reports/uniform");
    ok(&["eval", "--dataset", p(&manifest), "--selections", p(&sels), "--out", p(&prefix)]);
    let csv = fs::read_to_string(dir.path().join("reports/uniform.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("video_id,precision,recall,f1,os,op,s_star"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert_eq!(r[4].parse::<f64>().unwrap(), 12.0);
        assert_eq!(r[6].parse::<f64>().unwrap(), 12.0);
    }
    let report = read_json(&dir.path().join("reports/uniform.json"));
    assert_eq!(report["aggregate"]["video_id"], json!("mean"));
}

#[test]
fn full_pipeline_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = mini_config(d);
    let c = p(&cfg);
    ok(&["--config", c, "synth", "--out", p(d)]);
    let enc = d.join("models/encoder.json");
    ok(&["--config", c, "train-encoder", "--corpus", p(&d.join("corpus.json")), "--out", p(&enc)]);
    assert!(fs::read_to_string(d.join("models/encoder.log.ndjson")).unwrap().lines().count() == 2);
    let agent = d.join("models/agent.json");
    let train = d.join("train/manifest.json");
    ok(&["--config", c, "train-agent", "--dataset", p(&train), "--encoder", p(&enc), "--out", p(&agent)]);

    let test = d.join("test/manifest.json");
    let sel = d.join("sel");
    let args = ["fastforward", "--dataset", p(&test), "--encoder", p(&enc), "--agent", p(&agent)];
    ok(&[&args[..], &["--speedup", "12", "--out", p(&sel)]].concat());
    let s = read_json(&sel.join("test-0000.json"));
    assert_eq!(s["s_star"], json!(12));
    assert_eq!(s["selected_frames"][0], json!(1));
    let skips = fs::read_to_string(sel.join("test-0000.skips.csv")).unwrap();
    assert!(skips.starts_with("frame,nu,alignment"));

    let bad = semff(&[&args[..], &["--speedup", "26", "--out", p(&sel)]].concat());
    assert_eq!(bad.status.code(), Some(2));

    let prefix = d.join("sweep/agent");
    ok(&[
        "eval", "--dataset", p(&test), "--sweep", "2,12", "--encoder", p(&enc), "--agent", p(&agent),
        "--out", p(&prefix),
    ]);
    let sweep = fs::read_to_string(d.join("sweep/agent.sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 3);
    assert!(d.join("sweep/agent.s12.csv").exists());
}
