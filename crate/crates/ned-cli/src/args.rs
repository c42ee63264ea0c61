//! Argument structs. Every subcommand's arguments serialize into the run
//! manifest, and `rerun` deserializes them back, so the structs double as
//! the manifest schema.

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use ned_core::harness::PerturbKind;
use ned_core::{FileFormat, Metric, ScoreRule};

fn parse_format(s: &str) -> Result<FileFormat, String> {
    s.parse()
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    s.parse()
}

fn parse_rule(s: &str) -> Result<ScoreRule, String> {
    s.parse()
}

fn parse_perturb(s: &str) -> Result<PerturbKind, String> {
    s.parse()
}

#[derive(Debug, Parser)]
#[command(
    name = "ned",
    about = "Calibrated nearest-neighbor confidence scoring over embedding files",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "lowercase")]
pub enum Command {
    /// Validate an embedding file, print summary statistics, and
    /// optionally convert it to another format.
    Ingest(IngestArgs),
    /// Tune the score temperature by negative log-likelihood.
    Tune(TuneArgs),
    /// Score a query file against a support file and report calibration.
    Evaluate(EvaluateArgs),
    /// Sweep k values or perturbation severities across score rules.
    Sweep(SweepArgs),
    /// Sample a labeled embedding set from a Gaussian mixture spec.
    Synth(SynthArgs),
    /// Re-run a previous command from its manifest.json.
    #[serde(skip)]
    Rerun(RerunArgs),
}

#[derive(Debug, Parser, Serialize, Deserialize)]
pub struct IngestArgs {
    /// Embedding file to read.
    #[arg(long)]
    pub input: PathBuf,
    /// Format of the input file.
    #[arg(long, value_parser = parse_format, default_value = "jsonl")]
    pub input_format: FileFormat,
    /// Converted copy to write (omit to only validate and summarize).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Format of the output file.
    #[arg(long, value_parser = parse_format, default_value = "binary")]
    pub output_format: FileFormat,
    /// Distance metric for the separation diagnostic.
    #[arg(long, value_parser = parse_metric, default_value = "sqeuclidean")]
    pub metric: Metric,
    /// Pairs sampled by the separation diagnostic.
    #[arg(long, default_value_t = 1000)]
    pub sample: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for manifest.json and summary outputs.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Parser, Serialize, Deserialize)]
pub struct TuneArgs {
    /// Support (gallery) embedding file.
    #[arg(long)]
    pub support: PathBuf,
    #[arg(long, value_parser = parse_format, default_value = "jsonl")]
    pub format: FileFormat,
    /// Neighbors used by the score.
    #[arg(long, short)]
    pub k: usize,
    /// Objective data: `loo` (leave-one-out on the support set) or
    /// `holdout` (stratified split).
    #[arg(long, default_value = "loo")]
    pub mode: String,
    /// Holdout fraction (holdout mode only).
    #[arg(long, default_value_t = 0.2)]
    pub fraction: f64,
    /// Grid lower bound; omit for a data-adaptive grid.
    #[arg(long)]
    pub t_min: Option<f64>,
    /// Grid upper bound.
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Log-spaced grid points.
    #[arg(long, default_value_t = 32)]
    pub grid_points: usize,
    /// Golden-section refinement iterations after the grid scan.
    #[arg(long, default_value_t = 24)]
    pub refine_iters: usize,
    #[arg(long, value_parser = parse_metric, default_value = "sqeuclidean")]
    pub metric: Metric,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Parser, Serialize, Deserialize)]
pub struct EvaluateArgs {
    /// Support (gallery) embedding file.
    #[arg(long)]
    pub support: PathBuf,
    /// Query embedding file; its labels are the evaluation truth.
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long, value_parser = parse_format, default_value = "jsonl")]
    pub format: FileFormat,
    #[arg(long, value_parser = parse_rule, default_value = "ned")]
    pub rule: ScoreRule,
    #[arg(long, short, default_value_t = 32)]
    pub k: usize,
    /// Fixed temperature; omit to tune on the support set first.
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Reliability-diagram bins.
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
    #[arg(long, value_parser = parse_metric, default_value = "sqeuclidean")]
    pub metric: Metric,
    /// Include per-class score columns in predictions.csv.
    #[arg(long, default_value_t = false)]
    pub full_scores: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (0 = all cores); results do not depend on this.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Parser, Serialize, Deserialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub support: PathBuf,
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long, value_parser = parse_format, default_value = "jsonl")]
    pub format: FileFormat,
    /// What to sweep: `k` or `severity`.
    #[arg(long)]
    pub sweep: String,
    /// k values for a k sweep (comma-separated), or the single k used by
    /// a severity sweep.
    #[arg(long, short, value_delimiter = ',', default_value = "32")]
    pub k: Vec<usize>,
    /// Perturbation family for a severity sweep.
    #[arg(long, value_parser = parse_perturb)]
    pub perturb: Option<PerturbKind>,
    /// Score rules to include.
    #[arg(long, value_parser = parse_rule, value_delimiter = ',',
          default_value = "ned,knn,wknn-a,wknn-b,1nn")]
    pub rules: Vec<ScoreRule>,
    /// Fixed temperature; omit to tune on the clean support set (per k in
    /// a k sweep, once in a severity sweep).
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
    #[arg(long, value_parser = parse_metric, default_value = "sqeuclidean")]
    pub metric: Metric,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Parser, Serialize, Deserialize)]
pub struct SynthArgs {
    /// Gaussian mixture spec (JSON).
    #[arg(long)]
    pub spec: PathBuf,
    /// Records per class (balanced sampling).
    #[arg(long)]
    pub n_per_class: Option<usize>,
    /// Total records, apportioned by class priors.
    #[arg(long)]
    pub n_total: Option<usize>,
    /// Embedding file to write.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_parser = parse_format, default_value = "jsonl")]
    pub output_format: FileFormat,
    /// Sampling seed; defaults to the seed embedded in the spec.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Parser)]
pub struct RerunArgs {
    /// Path to a manifest.json written by a previous run.
    pub manifest: PathBuf,
}
