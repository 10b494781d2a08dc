//! `clustershape` command line: one subcommand per pipeline stage plus `run`.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use serde_json::json;

use clustershape::eval::hole_label_map;
use clustershape::experiment::{
    build_feature_matrix, describe, evaluate, load_feature_matrix, rank_features, run_experiment, select_images,
    train_digit_model, write_json, Experiment, ExperimentConfig, RunReport,
};
use clustershape::ingest::{image_to_point_cloud, load_mnist};
use clustershape::par::{with_workers, Execution};
use clustershape::sampling::generate_sample_set;
use clustershape::{Error, Result};

#[derive(Parser)]
#[command(
    name = "clustershape",
    version,
    about = "Clustering-based shape features for handwritten digits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse the IDX files and summarize the selected images.
    Ingest(Common),
    /// Write the resampled point clouds of one image.
    Sample {
        #[command(flatten)]
        common: Common,
        /// Image index in the IDX file.
        #[arg(long, default_value_t = 0)]
        image: usize,
    },
    /// Build features.csv for the selected images.
    Features(Common),
    /// Rank features and fit a digit classifier on the selection.
    Train(Common),
    /// Evaluate an experiment on an existing features.csv.
    Evaluate(Common),
    /// Run every stage for an experiment.
    Run(Common),
}

/// Flags mirror the config file fields; explicit flags win over `--config`.
#[derive(Args, Clone, Default)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    images: Option<usize>,
    #[arg(long)]
    trees: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long)]
    threshold: Option<u8>,
    #[arg(long)]
    noise_cutoff: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long, default_value = "digits-dim0")]
    experiment: String,
    /// Run on the calling thread only.
    #[arg(long)]
    sequential: bool,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|_| Error::MissingData(path.clone()))?;
                serde_json::from_str(&text)?
            }
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field.clone() {
                    cfg.$field = v;
                })*
            };
        }
        set!(
            data_dir,
            out_dir,
            seed,
            images,
            trees,
            folds,
            instances,
            threshold,
            noise_cutoff,
            workers,
            top_k
        );
        cfg.validate()?;
        Ok(cfg)
    }

    fn experiment(&self) -> Result<Experiment> {
        self.experiment.parse()
    }

    fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }
}

fn print_report(experiment: Experiment, report: &RunReport) {
    let mut summary = serde_json::Map::new();
    summary.insert("experiment".into(), json!(experiment.name()));
    for (name, table) in &report.score_tables {
        let overall = table.means()[table.classes.len()];
        info!("{experiment} {name}: {}", describe(table));
        summary.insert(format!("{name}_macro_f1"), json!(overall));
    }
    for c in &report.comparisons {
        if let Some(t) = c.tests.last() {
            summary.insert(
                format!("{}: overall", c.name),
                json!({"mean_diff": t.mean_diff, "t": t.t_statistic, "p_value": t.p_value}),
            );
        }
    }
    if !report.regression.is_empty() {
        let n = report.regression.len() as f64;
        let mean = report.regression.iter().map(|r| r.mean_relative_error).sum::<f64>() / n;
        summary.insert("mean_relative_error".into(), json!(mean));
    }
    summary.insert(
        "outputs".into(),
        json!(report
            .outputs
            .iter()
            .map(|p| p.display().to_string())
            .collect::<Vec<_>>()),
    );
    println!("{}", serde_json::Value::Object(summary));
}

fn ingest(cfg: &ExperimentConfig) -> Result<()> {
    let (images, labels) = load_mnist(&cfg.data_dir)?;
    let ids = select_images(&labels, cfg.images);
    let mut per_digit = [0usize; 10];
    let mut per_holes = [0usize; 3];
    let sizes: Vec<usize> = ids
        .iter()
        .map(|&i| image_to_point_cloud(images.image(i), images.cols, cfg.threshold).len())
        .collect();
    for &i in &ids {
        let d = labels.labels[i] as u32;
        per_digit[d as usize] += 1;
        per_holes[hole_label_map(d)? as usize] += 1;
    }
    let summary = json!({
        "available": images.len(),
        "rows": images.rows,
        "cols": images.cols,
        "selected": ids.len(),
        "per_digit": per_digit,
        "per_hole_count": per_holes,
        "points_min": sizes.iter().min(),
        "points_max": sizes.iter().max(),
        "points_mean": sizes.iter().sum::<usize>() as f64 / sizes.len().max(1) as f64,
    });
    println!("{summary}");
    Ok(())
}

fn sample(cfg: &ExperimentConfig, image: usize) -> Result<()> {
    let (images, labels) = load_mnist(&cfg.data_dir)?;
    if image >= images.len() {
        return Err(Error::InvalidConfig(format!(
            "image {image} out of range (have {})",
            images.len()
        )));
    }
    let pipeline = cfg.pipeline();
    let cloud = image_to_point_cloud(images.image(image), images.cols, cfg.threshold);
    let set = generate_sample_set(&cloud, &pipeline.sampling, pipeline.image_seed(image))?;
    fs::create_dir_all(&cfg.out_dir)?;
    let path = cfg.out_dir.join(format!("samples_{image:06}.json"));
    write_json(&path, &set)?;
    println!(
        "{}",
        json!({"image": image, "digit": labels.labels[image], "points": cloud.len(),
               "clouds": set.total_clouds(), "output": path.display().to_string()})
    );
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(c) => ingest(&c.config()?),
        Command::Sample { common, image } => sample(&common.config()?, image),
        Command::Features(c) => {
            let cfg = c.config()?;
            let matrix = with_workers(cfg.workers, || build_feature_matrix(&cfg, c.execution()))?;
            println!(
                "{}",
                json!({"rows": matrix.n_rows(), "features": matrix.n_features(),
                       "dim0": matrix.dim_count(0), "dim1": matrix.dim_count(1),
                       "output": cfg.out_dir.join("features.csv").display().to_string()})
            );
            Ok(())
        }
        Command::Train(c) => {
            let cfg = c.config()?;
            let exec = c.execution();
            let model = with_workers(cfg.workers, || -> Result<_> {
                let matrix = build_feature_matrix(&cfg, exec)?;
                let ranking = rank_features(&matrix, &cfg, exec)?;
                train_digit_model(&matrix, &ranking, &cfg, exec)
            })?;
            let path = cfg.out_dir.join("model.json");
            fs::write(&path, model.to_json()?)?;
            println!(
                "{}",
                json!({"trees": model.trees.len(), "features": model.n_features, "output": path.display().to_string()})
            );
            Ok(())
        }
        Command::Evaluate(c) => {
            let cfg = c.config()?;
            let experiment = c.experiment()?;
            let exec = c.execution();
            let report = with_workers(cfg.workers, || -> Result<_> {
                let matrix = load_feature_matrix(&cfg.out_dir)?;
                let ranking = rank_features(&matrix, &cfg, exec)?;
                evaluate(&matrix, &ranking, experiment, &cfg, exec)
            })?;
            print_report(experiment, &report);
            Ok(())
        }
        Command::Run(c) => {
            let cfg = c.config()?;
            let experiment = c.experiment()?;
            let report = run_experiment(&cfg, experiment, c.execution())?;
            print_report(experiment, &report);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({"error": e.kind(), "message": e.to_string()}));
            ExitCode::FAILURE
        }
    }
}
