//! End-to-end experiments: feature table, importance ranking, and the
//! cross-validated classification / regression studies.
//!
//! Stages and their on-disk products under `out_dir`:
//!
//! | stage    | files                                                   |
//! |----------|---------------------------------------------------------|
//! | features | `cache/<hash>/image-*.json`, `features.csv`, `features_manifest.json` |
//! | ranking  | `ranking.json`                                          |
//! | evaluate | `scores_<experiment>.csv`, `ttests_<experiment>.csv`, `manifest.json` |
//!
//! Each stage reuses its files when their recorded hash matches the current
//! configuration, so a rerun with an unchanged configuration only re-reads.

use std::fmt;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use log::info;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::eval::{
    f1_scores, mean_relative_error, paired_t_test, stratified_folds, FoldAssignment, ScoreTable, TTestResult,
};
use crate::features::{assemble_feature_matrix, FeatureManifest, FeatureMatrix, DEFAULT_HIST_BINS};
use crate::forest::{select_top_features, train_forest, Dataset, ForestModel, ForestParams, Selection, Targets};
use crate::ingest::{load_mnist, LabelSet, DEFAULT_THRESHOLD};
use crate::par::{with_workers, Execution};
use crate::pipeline::{extract_features, FeatureCache, PipelineConfig};
use crate::rng::derive_seed;
use crate::sampling::{landmark_grid, SamplingConfig, DEFAULT_RESOLUTIONS, DEFAULT_SAMPLING_BINS};
use crate::{Error, Result};

pub const FEATURES_CSV: &str = "features.csv";
pub const FEATURES_MANIFEST: &str = "features_manifest.json";
pub const RANKING_JSON: &str = "ranking.json";
pub const RUN_MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    DigitsDim0,
    DigitsDim1Supplement,
    HolesClassify,
    Dim1Regress,
    Dim1PredictFeedback,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::DigitsDim0,
        Experiment::DigitsDim1Supplement,
        Experiment::HolesClassify,
        Experiment::Dim1Regress,
        Experiment::Dim1PredictFeedback,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::DigitsDim0 => "digits-dim0",
            Experiment::DigitsDim1Supplement => "digits-dim1-supplement",
            Experiment::HolesClassify => "holes-classify",
            Experiment::Dim1Regress => "dim1-regress",
            Experiment::Dim1PredictFeedback => "dim1-predict-feedback",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown experiment '{s}'")))
    }
}

/// Run configuration. Defaults are the desk-scale setup: 2,000 images,
/// 10 instances per setting, 200 trees, 5-fold cross-validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    /// Per-image cache root; defaults to `<out_dir>/cache`.
    pub cache_dir: Option<PathBuf>,
    pub images: usize,
    pub threshold: u8,
    pub resolutions: Vec<u32>,
    pub instances: usize,
    pub sampling_bins: usize,
    pub hist_bins: usize,
    pub noise_cutoff: f64,
    pub trees: usize,
    pub min_leaf: usize,
    pub folds: usize,
    pub top_k: usize,
    pub seed: u64,
    /// Worker threads; 0 lets rayon decide.
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            data_dir: PathBuf::from("data/mnist"),
            out_dir: PathBuf::from("runs/default"),
            cache_dir: None,
            images: 2000,
            threshold: DEFAULT_THRESHOLD,
            resolutions: DEFAULT_RESOLUTIONS.to_vec(),
            instances: 10,
            sampling_bins: DEFAULT_SAMPLING_BINS,
            hist_bins: DEFAULT_HIST_BINS,
            noise_cutoff: 0.0,
            trees: 200,
            min_leaf: 1,
            folds: 5,
            top_k: 200,
            seed: 0,
            workers: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            threshold: self.threshold,
            sampling: SamplingConfig {
                landmarks: landmark_grid(),
                resolutions: self.resolutions.clone(),
                n_instances: self.instances,
                bins: self.sampling_bins,
            },
            hist_bins: self.hist_bins,
            noise_cutoff: self.noise_cutoff,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.pipeline().validate()?;
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.images == 0 {
            return bad("image count must be positive");
        }
        if self.trees == 0 || self.min_leaf == 0 {
            return bad("trees and min_leaf must be positive");
        }
        if self.folds < 2 {
            return bad("need at least 2 folds");
        }
        if self.top_k == 0 {
            return bad("top_k must be positive");
        }
        Ok(())
    }

    pub fn cache_root(&self) -> PathBuf {
        self.cache_dir.clone().unwrap_or_else(|| self.out_dir.join("cache"))
    }

    fn forest(&self, seed: u64) -> ForestParams {
        ForestParams {
            n_trees: self.trees,
            max_features: None,
            min_leaf: self.min_leaf,
            bootstrap: true,
            seed,
        }
    }

    /// Hash of everything the feature table depends on.
    pub fn table_hash(&self) -> String {
        hash_json(&(self.pipeline().hash(), self.images))
    }

    fn ranking_hash(&self) -> String {
        hash_json(&(self.table_hash(), self.trees, self.min_leaf, self.top_k))
    }
}

fn hash_json<T: Serialize>(value: &T) -> String {
    let digest = Sha256::digest(serde_json::to_vec(value).expect("serializable"));
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// First `n` images taken class by class in turn, each class in file order.
pub fn select_images(labels: &LabelSet, n: usize) -> Vec<usize> {
    let mut queues: Vec<std::collections::VecDeque<usize>> = vec![Default::default(); 256];
    for (i, &l) in labels.labels.iter().enumerate() {
        queues[l as usize].push_back(i);
    }
    let mut picked = Vec::with_capacity(n);
    while picked.len() < n && queues.iter().any(|q| !q.is_empty()) {
        for q in queues.iter_mut() {
            if picked.len() == n {
                break;
            }
            if let Some(i) = q.pop_front() {
                picked.push(i);
            }
        }
    }
    picked.sort_unstable();
    picked
}

/// Build (or reload) the feature table for `config`.
pub fn build_feature_matrix(config: &ExperimentConfig, exec: Execution) -> Result<FeatureMatrix> {
    config.validate()?;
    let settings = config.pipeline().sampling.settings();
    let table_hash = config.table_hash();
    let csv_path = config.out_dir.join(FEATURES_CSV);
    let manifest_path = config.out_dir.join(FEATURES_MANIFEST);
    if let (Ok(text), true) = (fs::read_to_string(&manifest_path), csv_path.exists()) {
        let manifest: FeatureManifest = serde_json::from_str(&text).map_err(|e| Error::CacheCorrupt {
            path: manifest_path.clone(),
            reason: e.to_string(),
        })?;
        if manifest.config_hash == table_hash {
            manifest.validate(&settings)?;
            let matrix = FeatureMatrix::read_csv(BufReader::new(fs::File::open(&csv_path)?), manifest.columns)?;
            if matrix.n_rows() != manifest.n_rows {
                return Err(Error::CacheCorrupt {
                    path: csv_path,
                    reason: format!("{} rows, manifest says {}", matrix.n_rows(), manifest.n_rows),
                });
            }
            info!("features: reusing {}", csv_path.display());
            return Ok(matrix);
        }
    }

    let started = Instant::now();
    let (images, labels) = load_mnist(&config.data_dir)?;
    let ids = select_images(&labels, config.images);
    info!("features: {} images, {} settings", ids.len(), settings.len());
    let cache = FeatureCache::new(&config.cache_root(), &config.pipeline())?;
    let per_image = extract_features(&images, &labels, &ids, &config.pipeline(), Some(&cache), exec)?;
    let matrix = assemble_feature_matrix(&settings, &per_image)?;
    fs::create_dir_all(&config.out_dir)?;
    matrix.write_csv(BufWriter::new(fs::File::create(&csv_path)?))?;
    let manifest = FeatureManifest::new(&matrix, table_hash, config.seed);
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)?;
    info!("features: wrote {} in {:.1?}", csv_path.display(), started.elapsed());
    Ok(matrix)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub hash: String,
    pub importances: Vec<f64>,
    pub selection: Selection,
}

impl Ranking {
    /// Selected indices of dimension `dim`, in rank order.
    pub fn selected(&self, matrix: &FeatureMatrix, dim: u8) -> Vec<usize> {
        self.selection
            .indices
            .iter()
            .copied()
            .filter(|&i| matrix.columns[i].dim == dim)
            .collect()
    }
}

/// Importance ranking from a digit classifier trained on every row and
/// feature, and the resulting top-`k` selection.
pub fn rank_features(matrix: &FeatureMatrix, config: &ExperimentConfig, exec: Execution) -> Result<Ranking> {
    let hash = config.ranking_hash();
    let path = config.out_dir.join(RANKING_JSON);
    if let Ok(text) = fs::read_to_string(&path) {
        let ranking: Ranking = serde_json::from_str(&text).map_err(|e| Error::CacheCorrupt {
            path: path.clone(),
            reason: e.to_string(),
        })?;
        if ranking.hash == hash {
            info!("ranking: reusing {}", path.display());
            return Ok(ranking);
        }
    }
    let started = Instant::now();
    let data = Dataset::new(matrix.values(), matrix.n_features())?;
    let digits: Vec<u32> = matrix.digits.iter().map(|&d| d as u32).collect();
    let model = train_forest(
        &data,
        Targets::Classes(&digits),
        &config.forest(derive_seed(config.seed, 0xA11)),
        exec,
    )?;
    let dims: Vec<u8> = matrix.columns.iter().map(|c| c.dim).collect();
    let k = config.top_k.min(matrix.n_features());
    let selection = select_top_features(&model.importances, k, &dims)?;
    info!(
        "ranking: top {k} = {} dim-0 + {} dim-1 ({:.1?})",
        selection.n_dim0,
        selection.n_dim1,
        started.elapsed()
    );
    let ranking = Ranking {
        hash,
        importances: model.importances,
        selection,
    };
    fs::create_dir_all(&config.out_dir)?;
    fs::write(&path, serde_json::to_string(&ranking)?)?;
    Ok(ranking)
}

/// Digit classifier on the selected columns of every row, tagged with the
/// hash of the selected column names.
pub fn train_digit_model(
    matrix: &FeatureMatrix,
    ranking: &Ranking,
    config: &ExperimentConfig,
    exec: Execution,
) -> Result<ForestModel> {
    let cols = &ranking.selection.indices;
    let rows: Vec<usize> = (0..matrix.n_rows()).collect();
    let x = gather(matrix.values(), matrix.n_features(), &rows, cols, &[]);
    let digits: Vec<u32> = matrix.digits.iter().map(|&d| d as u32).collect();
    let mut model = train_forest(
        &Dataset::new(&x, cols.len())?,
        Targets::Classes(&digits),
        &config.forest(derive_seed(config.seed, 0xB0D)),
        exec,
    )?;
    let names: Vec<&str> = cols.iter().map(|&i| matrix.columns[i].name.as_str()).collect();
    model.columns_hash = Some(hash_json(&names));
    Ok(model)
}

/// Row-major values for `rows` × `cols`, optionally followed by extra columns.
fn gather(matrix_values: &[f64], p: usize, rows: &[usize], cols: &[usize], extra: &[&[f64]]) -> Vec<f64> {
    let mut out = Vec::with_capacity(rows.len() * (cols.len() + extra.len()));
    for &r in rows {
        let row = &matrix_values[r * p..(r + 1) * p];
        out.extend(cols.iter().map(|&c| row[c]));
        out.extend(extra.iter().map(|e| e[r]));
    }
    out
}

/// A named feature set for cross-validated classification.
pub struct FeatureSet<'a> {
    pub name: String,
    pub columns: Vec<usize>,
    /// Additional full-length columns appended after `columns`.
    pub extra: Vec<&'a [f64]>,
}

/// Cross-validated classification of `labels` on each feature set. Every
/// set sees the same folds and the same per-fold forest seed.
pub fn cross_validate(
    matrix: &FeatureMatrix,
    labels: &[u32],
    folds: &FoldAssignment,
    sets: &[FeatureSet],
    config: &ExperimentConfig,
    exec: Execution,
) -> Result<Vec<ScoreTable>> {
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let p = matrix.n_features();
    let mut tables: Vec<ScoreTable> = sets.iter().map(|_| ScoreTable::new(classes.clone())).collect();
    for f in 0..folds.k {
        let (train, test) = folds.split(f);
        let y_train: Vec<u32> = train.iter().map(|&r| labels[r]).collect();
        let y_test: Vec<u32> = test.iter().map(|&r| labels[r]).collect();
        let params = config.forest(derive_seed(config.seed, 0xF0_0000 + f as u64));
        for (set, table) in sets.iter().zip(tables.iter_mut()) {
            let width = set.columns.len() + set.extra.len();
            let x_train = gather(matrix.values(), p, &train, &set.columns, &set.extra);
            let x_test = gather(matrix.values(), p, &test, &set.columns, &set.extra);
            let model = train_forest(
                &Dataset::new(&x_train, width)?,
                Targets::Classes(&y_train),
                &params,
                exec,
            )?;
            let predicted = x_test
                .chunks_exact(width)
                .map(|x| model.predict_class(x))
                .collect::<Result<Vec<_>>>()?;
            let row = f1_scores(&predicted, &y_test, &classes)?;
            info!(
                "fold {}/{} {:<12} macro-F1 {:.4}",
                f + 1,
                folds.k,
                set.name,
                row.overall
            );
            table.folds.push(row);
        }
    }
    Ok(tables)
}

/// Per-column paired t-tests of `b` against `a` (differences `b - a`).
pub fn compare_tables(a: &ScoreTable, b: &ScoreTable) -> Result<Vec<TTestResult>> {
    (0..=a.classes.len())
        .map(|c| paired_t_test(&a.column(c), &b.column(c)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub name: String,
    pub classes: Vec<u32>,
    pub tests: Vec<TTestResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionScore {
    pub feature: String,
    pub rank: usize,
    pub fold: usize,
    pub mean_relative_error: f64,
    pub skipped: usize,
}

/// Out-of-fold regression of each selected dimension-1 feature from the
/// selected dimension-0 features. Within every training fold a first forest
/// ranks the dimension-0 inputs and the top third of them (at least one)
/// feed the final regressor.
pub fn regress_dim1(
    matrix: &FeatureMatrix,
    ranking: &Ranking,
    folds: &FoldAssignment,
    config: &ExperimentConfig,
    exec: Execution,
) -> Result<(Vec<RegressionScore>, Vec<Vec<f64>>)> {
    let dim0 = ranking.selected(matrix, 0);
    let targets = ranking.selected(matrix, 1);
    if dim0.is_empty() {
        return Err(Error::InvalidConfig("no dimension-0 features were selected".into()));
    }
    let keep = ((dim0.len() as f64 / 3.0).round() as usize).max(1);
    let p = matrix.n_features();
    let dims0 = vec![0u8; dim0.len()];
    let mut scores = Vec::new();
    let mut predictions = Vec::with_capacity(targets.len());
    for (rank, &t) in targets.iter().enumerate() {
        let y: Vec<f64> = (0..matrix.n_rows()).map(|r| matrix.row(r)[t]).collect();
        let mut oof = vec![0.0; matrix.n_rows()];
        for f in 0..folds.k {
            let (train, test) = folds.split(f);
            let y_train: Vec<f64> = train.iter().map(|&r| y[r]).collect();
            let seed = derive_seed(config.seed, 0xE0_0000 + (rank * folds.k + f) as u64);
            let x_pre = gather(matrix.values(), p, &train, &dim0, &[]);
            let pre = train_forest(
                &Dataset::new(&x_pre, dim0.len())?,
                Targets::Values(&y_train),
                &config.forest(derive_seed(seed, 1)),
                exec,
            )?;
            let top = select_top_features(&pre.importances, keep, &dims0)?;
            let cols: Vec<usize> = top.indices.iter().map(|&i| dim0[i]).collect();
            let x_train = gather(matrix.values(), p, &train, &cols, &[]);
            let model = train_forest(
                &Dataset::new(&x_train, cols.len())?,
                Targets::Values(&y_train),
                &config.forest(derive_seed(seed, 2)),
                exec,
            )?;
            let x_test = gather(matrix.values(), p, &test, &cols, &[]);
            let mut predicted = Vec::with_capacity(test.len());
            for (x, &r) in x_test.chunks_exact(cols.len()).zip(&test) {
                let v = model.predict_value(x)?;
                oof[r] = v;
                predicted.push(v);
            }
            let actual: Vec<f64> = test.iter().map(|&r| y[r]).collect();
            let mre = mean_relative_error(&predicted, &actual)?;
            scores.push(RegressionScore {
                feature: matrix.columns[t].name.clone(),
                rank,
                fold: f,
                mean_relative_error: mre.mean,
                skipped: mre.skipped,
            });
        }
        info!("regress {}: done", matrix.columns[t].name);
        predictions.push(oof);
    }
    Ok((scores, predictions))
}

/// Everything an experiment produced.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub score_tables: Vec<(String, ScoreTable)>,
    pub comparisons: Vec<Comparison>,
    pub regression: Vec<RegressionScore>,
    pub outputs: Vec<PathBuf>,
}

impl RunReport {
    pub fn table(&self, name: &str) -> Option<&ScoreTable> {
        self.score_tables.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }
}

#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    experiment: Experiment,
    config: &'a ExperimentConfig,
    pipeline_hash: String,
    table_hash: String,
    images: usize,
    features: usize,
    selection: &'a Selection,
    selected_columns: Vec<&'a str>,
    outputs: Vec<String>,
}

/// Evaluate `experiment` on an existing feature table.
pub fn evaluate(
    matrix: &FeatureMatrix,
    ranking: &Ranking,
    experiment: Experiment,
    config: &ExperimentConfig,
    exec: Execution,
) -> Result<RunReport> {
    let digits: Vec<u32> = matrix.digits.iter().map(|&d| d as u32).collect();
    let holes: Vec<u32> = matrix.hole_counts.iter().map(|&h| h as u32).collect();
    let folds = stratified_folds(&digits, config.folds, derive_seed(config.seed, 0xF01D))?;
    let dim0 = ranking.selected(matrix, 0);
    let dim1 = ranking.selected(matrix, 1);
    let both = ranking.selection.indices.clone();
    let set = |name: &str, columns: &[usize]| FeatureSet {
        name: name.to_string(),
        columns: columns.to_vec(),
        extra: vec![],
    };
    let non_empty = |cols: &[usize], what: &str| {
        if cols.is_empty() {
            Err(Error::InvalidConfig(format!(
                "the top-{} selection has no {what} features",
                config.top_k
            )))
        } else {
            Ok(())
        }
    };
    non_empty(&dim0, "dimension-0")?;

    let mut report = RunReport::default();
    match experiment {
        Experiment::DigitsDim0 => {
            let t = cross_validate(matrix, &digits, &folds, &[set("dim0", &dim0)], config, exec)?;
            report.score_tables.push(("dim0".into(), t.into_iter().next().unwrap()));
        }
        Experiment::DigitsDim1Supplement => {
            non_empty(&dim1, "dimension-1")?;
            let sets = [set("dim0", &dim0), set("dim1", &dim1), set("dim0+dim1", &both)];
            let mut tables = cross_validate(matrix, &digits, &folds, &sets, config, exec)?.into_iter();
            let (t0, t1, t01) = (tables.next().unwrap(), tables.next().unwrap(), tables.next().unwrap());
            for (name, a, b) in [
                ("dim0 -> dim0+dim1", &t0, &t01),
                ("dim1 -> dim0+dim1", &t1, &t01),
                ("dim1 -> dim0", &t1, &t0),
            ] {
                report.comparisons.push(Comparison {
                    name: name.into(),
                    classes: a.classes.clone(),
                    tests: compare_tables(a, b)?,
                });
            }
            report.score_tables = vec![("dim0".into(), t0), ("dim1".into(), t1), ("dim0+dim1".into(), t01)];
        }
        Experiment::HolesClassify => {
            let t = cross_validate(matrix, &holes, &folds, &[set("dim0", &dim0)], config, exec)?;
            report.score_tables.push(("dim0".into(), t.into_iter().next().unwrap()));
        }
        Experiment::Dim1Regress => {
            non_empty(&dim1, "dimension-1")?;
            let (scores, _) = regress_dim1(matrix, ranking, &folds, config, exec)?;
            report.regression = scores;
        }
        Experiment::Dim1PredictFeedback => {
            non_empty(&dim1, "dimension-1")?;
            let (scores, predicted) = regress_dim1(matrix, ranking, &folds, config, exec)?;
            report.regression = scores;
            let extra: Vec<&[f64]> = predicted.iter().map(|v| v.as_slice()).collect();
            let sets = [
                set("dim0", &dim0),
                FeatureSet {
                    name: "dim0+predicted".into(),
                    columns: dim0.clone(),
                    extra,
                },
            ];
            let mut tables = cross_validate(matrix, &digits, &folds, &sets, config, exec)?.into_iter();
            let (t0, tp) = (tables.next().unwrap(), tables.next().unwrap());
            report.comparisons.push(Comparison {
                name: "dim0 -> dim0+predicted".into(),
                classes: t0.classes.clone(),
                tests: compare_tables(&t0, &tp)?,
            });
            report.score_tables = vec![("dim0".into(), t0), ("dim0+predicted".into(), tp)];
        }
    }
    write_reports(&mut report, matrix, ranking, experiment, config)?;
    Ok(report)
}

fn write_reports(
    report: &mut RunReport,
    matrix: &FeatureMatrix,
    ranking: &Ranking,
    experiment: Experiment,
    config: &ExperimentConfig,
) -> Result<()> {
    fs::create_dir_all(&config.out_dir)?;
    let scores_path = config.out_dir.join(format!("scores_{experiment}.csv"));
    if report.regression.is_empty() || !report.score_tables.is_empty() {
        write_scores_csv(&scores_path, &report.score_tables)?;
        report.outputs.push(scores_path.clone());
    }
    if !report.regression.is_empty() {
        let path = if report.score_tables.is_empty() {
            scores_path
        } else {
            config.out_dir.join(format!("regression_{experiment}.csv"))
        };
        write_regression_csv(&path, &report.regression)?;
        report.outputs.push(path);
    }
    if !report.comparisons.is_empty() {
        let path = config.out_dir.join(format!("ttests_{experiment}.csv"));
        write_ttests_csv(&path, &report.comparisons)?;
        report.outputs.push(path);
    }
    let manifest = RunManifest {
        experiment,
        config,
        pipeline_hash: config.pipeline().hash(),
        table_hash: config.table_hash(),
        images: matrix.n_rows(),
        features: matrix.n_features(),
        selection: &ranking.selection,
        selected_columns: ranking
            .selection
            .indices
            .iter()
            .map(|&i| matrix.columns[i].name.as_str())
            .collect(),
        outputs: report
            .outputs
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect(),
    };
    let path = config.out_dir.join(RUN_MANIFEST);
    fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    report.outputs.push(path);
    Ok(())
}

/// Per-fold F1 scores: one row per fold plus `mean` and `sd`, one column per
/// class plus `overall`, grouped by feature set.
pub fn write_scores_csv(path: &Path, tables: &[(String, ScoreTable)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(fs::File::create(path)?));
    let classes = tables.first().map(|(_, t)| t.classes.clone()).unwrap_or_default();
    let mut header = vec!["feature_set".to_string(), "row".to_string()];
    header.extend(classes.iter().map(|c| c.to_string()));
    header.push("overall".into());
    w.write_record(&header)?;
    for (name, table) in tables {
        for (f, row) in table.folds.iter().enumerate() {
            let mut rec = vec![name.clone(), format!("fold_{}", f + 1)];
            rec.extend(row.per_class.iter().map(|v| v.to_string()));
            rec.push(row.overall.to_string());
            w.write_record(&rec)?;
        }
        for (label, values) in [("mean", table.means()), ("sd", table.sds())] {
            let mut rec = vec![name.clone(), label.to_string()];
            rec.extend(values.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Paired t-tests: per comparison, rows `mean_diff`, `t`, `df`, `p_value`.
pub fn write_ttests_csv(path: &Path, comparisons: &[Comparison]) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(fs::File::create(path)?));
    let classes = comparisons.first().map(|c| c.classes.clone()).unwrap_or_default();
    let mut header = vec!["comparison".to_string(), "statistic".to_string()];
    header.extend(classes.iter().map(|c| c.to_string()));
    header.push("overall".into());
    w.write_record(&header)?;
    for c in comparisons {
        let rows: [(&str, Box<dyn Fn(&TTestResult) -> String>); 4] = [
            ("mean_diff", Box::new(|t| t.mean_diff.to_string())),
            ("t", Box::new(|t| t.t_statistic.to_string())),
            ("df", Box::new(|t| t.df.to_string())),
            ("p_value", Box::new(|t| t.p_value.to_string())),
        ];
        for (label, value) in rows.iter() {
            let mut rec = vec![c.name.clone(), label.to_string()];
            rec.extend(c.tests.iter().map(value));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_regression_csv(path: &Path, scores: &[RegressionScore]) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(fs::File::create(path)?));
    w.write_record(["feature", "rank", "fold", "mean_relative_error", "skipped"])?;
    for s in scores {
        w.write_record([
            s.feature.clone(),
            s.rank.to_string(),
            (s.fold + 1).to_string(),
            s.mean_relative_error.to_string(),
            s.skipped.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Features → ranking → evaluation for one experiment, on `config.workers` threads.
pub fn run_experiment(config: &ExperimentConfig, experiment: Experiment, exec: Execution) -> Result<RunReport> {
    config.validate()?;
    with_workers(config.workers, || {
        let matrix = build_feature_matrix(config, exec)?;
        let ranking = rank_features(&matrix, config, exec)?;
        evaluate(&matrix, &ranking, experiment, config, exec)
    })
}

/// Load the feature table written by [`build_feature_matrix`] without
/// recomputing anything.
pub fn load_feature_matrix(out_dir: &Path) -> Result<FeatureMatrix> {
    let manifest_path = out_dir.join(FEATURES_MANIFEST);
    let text = fs::read_to_string(&manifest_path).map_err(|_| Error::MissingData(manifest_path.clone()))?;
    let manifest: FeatureManifest = serde_json::from_str(&text)?;
    let csv_path = out_dir.join(FEATURES_CSV);
    let file = fs::File::open(&csv_path).map_err(|_| Error::MissingData(csv_path))?;
    FeatureMatrix::read_csv(BufReader::new(file), manifest.columns)
}

/// Human-readable one-line summary of a score table's overall column.
pub fn describe(table: &ScoreTable) -> String {
    let means = table.means();
    let sds = table.sds();
    let n = table.classes.len();
    format!("macro-F1 {:.4} ± {:.4}", means[n], sds[n])
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    f.flush()?;
    Ok(())
}
