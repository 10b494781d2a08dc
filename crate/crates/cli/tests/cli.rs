//! Drives the `clustershape` binary on a tiny synthetic dataset.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use clustershape::ingest::{serialize_images, serialize_labels, ImageSet, LabelSet, TRAIN_IMAGES, TRAIN_LABELS};

fn write_dataset(dir: &Path) {
    let mut pixels = Vec::new();
    let mut labels = Vec::new();
    for i in 0..40u8 {
        let d = i % 10;
        let radius = 4.0 + (d % 5) as f64 + (i / 10) as f64 * 0.3;
        for r in 0..28 {
            for c in 0..28 {
                let dist = ((r as f64 - 13.5).powi(2) + (c as f64 - 13.5).powi(2)).sqrt();
                let bar = d >= 5 && c == 13;
                pixels.push(if (dist - radius).abs() < 1.1 || bar { 220 } else { 0 });
            }
        }
        labels.push(d);
    }
    fs::create_dir_all(dir).unwrap();
    fs::write(
        dir.join(TRAIN_IMAGES),
        serialize_images(&ImageSet::new(28, 28, pixels).unwrap()),
    )
    .unwrap();
    fs::write(dir.join(TRAIN_LABELS), serialize_labels(&LabelSet { labels })).unwrap();
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clustershape"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn error_json(out: &Output) -> serde_json::Value {
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(stderr.lines().last().unwrap()).unwrap()
}

const SMALL: [&str; 10] = [
    "--images",
    "20",
    "--instances",
    "2",
    "--trees",
    "10",
    "--folds",
    "2",
    "--seed",
    "4",
];

#[test]
fn ingest_summarizes_selection() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    write_dataset(&data);
    let v = stdout_json(&run(&[
        "ingest",
        "--data-dir",
        data.to_str().unwrap(),
        "--images",
        "20",
    ]));
    assert_eq!(v["selected"], 20);
    assert_eq!(v["available"], 40);
    assert_eq!(v["per_digit"][3], 2);
}

#[test]
fn stages_then_evaluate() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let out = tmp.path().join("out");
    write_dataset(&data);
    let common = [
        &["--data-dir", data.to_str().unwrap(), "--out-dir", out.to_str().unwrap()][..],
        &SMALL[..],
    ]
    .concat();

    let v = stdout_json(&run(&[&["sample", "--image", "3"][..], &common].concat()));
    assert_eq!(v["clouds"], 45 * 2);
    assert!(Path::new(v["output"].as_str().unwrap()).exists());

    let v = stdout_json(&run(&[&["features"][..], &common].concat()));
    assert_eq!(v["features"], 1395);
    assert_eq!(v["rows"], 20);

    let v = stdout_json(&run(&[&["train"][..], &common].concat()));
    assert_eq!(v["trees"], 10);
    assert!(out.join("model.json").exists());

    let v = stdout_json(&run(
        &[&["evaluate", "--experiment", "holes-classify"][..], &common].concat()
    ));
    assert!(v["dim0_macro_f1"].as_f64().unwrap() >= 0.0);
    assert!(out.join("scores_holes-classify.csv").exists());
}

#[test]
fn explicit_flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let out = tmp.path().join("out");
    write_dataset(&data);
    let config = tmp.path().join("config.json");
    let body = serde_json::json!({
        "data_dir": data, "out_dir": out, "images": 10, "instances": 2,
        "trees": 8, "folds": 2, "resolutions": [3]
    });
    fs::write(&config, body.to_string()).unwrap();
    let v = stdout_json(&run(&["run", "--config", config.to_str().unwrap(), "--images", "20"]));
    assert!(v["dim0_macro_f1"].is_number());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["images"], 20);
    assert_eq!(manifest["config"]["trees"], 8);
    assert_eq!(manifest["features"], 9 * 28 + 9 * 3);
}

#[test]
fn failures_emit_error_json() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nowhere");
    let v = error_json(&run(&[
        "run",
        "--data-dir",
        missing.to_str().unwrap(),
        "--out-dir",
        tmp.path().to_str().unwrap(),
    ]));
    assert_eq!(v["error"], "MissingData");
    assert!(v["message"].as_str().unwrap().contains("nowhere"));

    let v = error_json(&run(&["run", "--experiment", "everything"]));
    assert_eq!(v["error"], "InvalidConfig");

    let v = error_json(&run(&["features", "--instances", "1"]));
    assert_eq!(v["error"], "InvalidConfig");
}
