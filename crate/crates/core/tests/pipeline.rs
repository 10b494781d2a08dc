//! End-to-end runs on a small synthetic IDX dataset.

use std::fs;
use std::path::Path;

use clustershape::experiment::{build_feature_matrix, run_experiment, Experiment, ExperimentConfig};
use clustershape::ingest::{serialize_images, serialize_labels, ImageSet, LabelSet, TRAIN_IMAGES, TRAIN_LABELS};
use clustershape::par::Execution;
use clustershape::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Digit `d` is drawn as `d % 3 + 1` rings or a bar, with jitter.
fn synthetic_digit(rng: &mut ChaCha8Rng, d: u8) -> Vec<u8> {
    let mut img = vec![0u8; 784];
    let (cx, cy) = (13.5 + rng.random_range(-1.5..1.5), 13.5 + rng.random_range(-1.5..1.5));
    for r in 0..28 {
        for c in 0..28 {
            let (x, y) = (c as f64 - cx, r as f64 - cy);
            let ink = match d % 4 {
                0 => (x.hypot(y) - 8.0).abs() < 1.2,
                1 => x.abs() < 1.5 && y.abs() < 10.0,
                2 => (x.hypot(y - 5.0) - 4.0).abs() < 1.2 || (x.hypot(y + 5.0) - 4.0).abs() < 1.2,
                _ => (x.hypot(y + 4.0) - 4.5).abs() < 1.2 || (x.abs() < 1.2 && y > 0.0 && y < 10.0),
            };
            if ink {
                img[r * 28 + c] = rng.random_range(150..=255);
            }
        }
    }
    img
}

fn write_dataset(dir: &Path, per_class: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut pixels = Vec::new();
    let mut labels = Vec::new();
    for i in 0..per_class * 10 {
        let d = (i % 10) as u8;
        pixels.extend(synthetic_digit(&mut rng, d));
        labels.push(d);
    }
    fs::create_dir_all(dir).unwrap();
    let images = ImageSet::new(28, 28, pixels).unwrap();
    fs::write(dir.join(TRAIN_IMAGES), serialize_images(&images)).unwrap();
    fs::write(dir.join(TRAIN_LABELS), serialize_labels(&LabelSet { labels })).unwrap();
}

fn small_config(root: &Path) -> ExperimentConfig {
    ExperimentConfig {
        data_dir: root.join("data"),
        out_dir: root.join("out"),
        images: 30,
        resolutions: vec![2, 4],
        instances: 3,
        trees: 15,
        folds: 3,
        top_k: 40,
        seed: 3,
        ..Default::default()
    }
}

#[test]
fn every_experiment_writes_its_reports() {
    let tmp = tempfile::tempdir().unwrap();
    write_dataset(&tmp.path().join("data"), 3);
    let cfg = small_config(tmp.path());
    for e in Experiment::ALL {
        let report = run_experiment(&cfg, e, Execution::Parallel).unwrap();
        for path in &report.outputs {
            assert!(path.exists(), "{e}: {} missing", path.display());
        }
        assert!(cfg.out_dir.join(format!("scores_{e}.csv")).exists());
        match e {
            Experiment::DigitsDim1Supplement | Experiment::Dim1PredictFeedback => {
                assert!(cfg.out_dir.join(format!("ttests_{e}.csv")).exists());
            }
            Experiment::Dim1Regress => assert!(!report.regression.is_empty()),
            _ => {}
        }
        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(cfg.out_dir.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["experiment"], e.name());
    }
    let header = fs::read_to_string(cfg.out_dir.join("features.csv")).unwrap();
    let header = header.lines().next().unwrap();
    assert!(header.starts_with("image,d0_L0_k2_single_min,"));
    assert!(header.ends_with(",digit,hole_count"));
}

#[test]
fn reruns_reuse_and_reproduce_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    write_dataset(&tmp.path().join("data"), 3);
    let cfg = small_config(tmp.path());
    run_experiment(&cfg, Experiment::HolesClassify, Execution::Parallel).unwrap();
    let features = fs::read(cfg.out_dir.join("features.csv")).unwrap();
    let scores = fs::read(cfg.out_dir.join("scores_holes-classify.csv")).unwrap();

    // Dropping the feature table forces a rebuild from the per-image cache.
    fs::remove_file(cfg.out_dir.join("features.csv")).unwrap();
    fs::remove_file(cfg.out_dir.join("ranking.json")).unwrap();
    run_experiment(&cfg, Experiment::HolesClassify, Execution::Sequential).unwrap();
    assert_eq!(fs::read(cfg.out_dir.join("features.csv")).unwrap(), features);
    assert_eq!(fs::read(cfg.out_dir.join("scores_holes-classify.csv")).unwrap(), scores);

    // Dropping every cache layer reproduces the same bytes too.
    fs::remove_dir_all(&cfg.out_dir).unwrap();
    run_experiment(&cfg, Experiment::HolesClassify, Execution::Parallel).unwrap();
    assert_eq!(fs::read(cfg.out_dir.join("features.csv")).unwrap(), features);
    assert_eq!(fs::read(cfg.out_dir.join("scores_holes-classify.csv")).unwrap(), scores);
}

#[test]
fn corrupt_cache_entry_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    write_dataset(&tmp.path().join("data"), 3);
    let cfg = small_config(tmp.path());
    build_feature_matrix(&cfg, Execution::Parallel).unwrap();
    fs::remove_file(cfg.out_dir.join("features.csv")).unwrap();
    let cache = cfg.cache_root();
    let entry = fs::read_dir(&cache)
        .unwrap()
        .flat_map(|d| fs::read_dir(d.unwrap().path()).unwrap())
        .map(|f| f.unwrap().path())
        .next()
        .unwrap();
    fs::write(&entry, "{\"truncated\":").unwrap();
    assert!(matches!(
        build_feature_matrix(&cfg, Execution::Parallel),
        Err(Error::CacheCorrupt { .. })
    ));
}

#[test]
fn missing_data_and_bad_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let err = run_experiment(&cfg, Experiment::DigitsDim0, Execution::Parallel).unwrap_err();
    assert_eq!(err.kind(), "MissingData");

    write_dataset(&tmp.path().join("data"), 3);
    let too_many_folds = ExperimentConfig { folds: 5, ..cfg };
    let err = run_experiment(&too_many_folds, Experiment::DigitsDim0, Execution::Parallel).unwrap_err();
    assert!(matches!(err, Error::ClassTooSmall { .. }), "{err}");
}
