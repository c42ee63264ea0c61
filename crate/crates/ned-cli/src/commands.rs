//! Subcommand implementations.
//!
//! Every command writes `manifest.json` into its output directory;
//! `ned rerun manifest.json` replays the command and, since all randomness
//! is seeded, reproduces every output byte for byte.

use std::path::Path;

use serde::Serialize;

use ned_core::calibration;
use ned_core::harness;
use ned_core::index::separation_diagnostic;
use ned_core::oracle::{generate_mixture, generate_mixture_proportional, MixtureSpec};
use ned_core::scorer::Prediction;
use ned_core::tuner::{tune_temperature, TemperatureGrid, TuneConfig, TuneMode};
use ned_core::{Metric, NedError, ScoreRule, ScorerConfig, SetRole, SupportSet};

use crate::args::{Command, EvaluateArgs, IngestArgs, RerunArgs, SweepArgs, SynthArgs, TuneArgs};

/// A command failure carrying its process exit code.
pub struct CliFailure {
    pub code: i32,
    pub message: String,
    pub hint: Option<String>,
}

impl CliFailure {
    fn invalid(message: impl Into<String>) -> Self {
        CliFailure {
            code: 2,
            message: message.into(),
            hint: None,
        }
    }
}

impl From<NedError> for CliFailure {
    fn from(e: NedError) -> Self {
        let code = match &e {
            NedError::UnknownLabel { .. } | NedError::LabelSpaceMismatch { .. } => 4,
            NedError::SingleRecordClass { .. } | NedError::NeighborCount { .. } => 3,
            _ => 2,
        };
        let hint = match &e {
            NedError::SingleRecordClass { label } => Some(format!(
                "class `{label}` cannot be scored leave-one-out; use `--mode holdout` or drop the class"
            )),
            _ => None,
        };
        CliFailure {
            code,
            message: e.to_string(),
            hint,
        }
    }
}

type CmdResult = Result<(), CliFailure>;

pub fn dispatch(command: Command) -> CmdResult {
    match &command {
        Command::Ingest(args) => run_ingest(args, &command),
        Command::Tune(args) => run_tune(args, &command),
        Command::Evaluate(args) => run_evaluate(args, &command),
        Command::Sweep(args) => run_sweep(args, &command),
        Command::Synth(args) => run_synth(args, &command),
        Command::Rerun(args) => run_rerun(args),
    }
}

fn init_threads(threads: usize) {
    if threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
}

fn note_cosine(metric: Metric) {
    if metric == Metric::Cosine {
        eprintln!(
            "note: the calibration theory behind the exponential score is derived for \
             squared-euclidean distances; cosine results are not covered by it"
        );
    }
}

fn write_text(dir: &Path, name: &str, content: &str) -> CmdResult {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliFailure::invalid(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, content)
        .map_err(|e| CliFailure::invalid(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> CmdResult {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliFailure::invalid(format!("serializing {name}: {e}")))?;
    text.push('\n');
    write_text(dir, name, &text)
}

fn load_support(path: &Path, format: ned_core::FileFormat) -> Result<SupportSet, CliFailure> {
    Ok(SupportSet::load(path, format)?)
}

/// Query ids, vectors, and true label indices from one file.
type QueryData = (Vec<String>, Vec<Vec<f64>>, Vec<usize>);

fn load_queries(
    path: &Path,
    format: ned_core::FileFormat,
    support: &SupportSet,
) -> Result<QueryData, CliFailure> {
    let set = SupportSet::load_with_space(path, format, support.label_space(), SetRole::Query)?;
    if set.is_empty() {
        return Err(CliFailure::invalid(format!(
            "{}: query file is empty",
            path.display()
        )));
    }
    if set.dim() != support.dim() {
        return Err(CliFailure::invalid(format!(
            "query dimension {} does not match support dimension {}",
            set.dim(),
            support.dim()
        )));
    }
    let ids = set.records().iter().map(|r| r.id.clone()).collect();
    let queries = set.records().iter().map(|r| r.vector.clone()).collect();
    let truth = set.records().iter().map(|r| r.label).collect();
    Ok((ids, queries, truth))
}

// --- ingest -----------------------------------------------------------

fn run_ingest(args: &IngestArgs, manifest: &Command) -> CmdResult {
    let set = load_support(&args.input, args.input_format)?;
    write_json(&args.out_dir, "manifest.json", manifest)?;

    println!("records: {}", set.len());
    println!("dim: {}", set.dim());
    println!("classes: {}", set.num_classes());
    for (j, count) in set.class_counts().iter().enumerate() {
        println!("  {}: {}", set.label_space().name(j), count);
    }
    if set.num_classes() >= 2 && set.len() >= 2 {
        let (intra, inter) = separation_diagnostic(&set, args.metric, args.sample, args.seed)?;
        println!(
            "separation ({} pairs, seed {}): intra={intra} inter={inter} ratio={}",
            args.sample,
            args.seed,
            intra / inter
        );
    } else {
        println!("separation: n/a (needs at least two classes)");
    }

    if let Some(output) = &args.output {
        set.write(output, args.output_format)?;
        println!(
            "wrote {} records to {} ({})",
            set.len(),
            output.display(),
            args.output_format
        );
    }
    Ok(())
}

// --- tune -------------------------------------------------------------

#[derive(Serialize)]
struct TuneDoc {
    t_star: f64,
    nll_at_t_star: f64,
    interior: bool,
    mode: String,
    k: usize,
    metric: Metric,
    evaluations: usize,
}

fn tune_mode_of(args: &TuneArgs) -> Result<TuneMode, CliFailure> {
    match args.mode.as_str() {
        "loo" => Ok(TuneMode::LeaveOneOut),
        "holdout" => Ok(TuneMode::Holdout {
            fraction: args.fraction,
            seed: args.seed,
        }),
        other => Err(CliFailure::invalid(format!(
            "unknown tuning mode `{other}` (loo|holdout)"
        ))),
    }
}

fn grid_of(
    t_min: Option<f64>,
    t_max: Option<f64>,
    points: usize,
) -> Result<Option<TemperatureGrid>, CliFailure> {
    match (t_min, t_max) {
        (Some(lo), Some(hi)) => Ok(Some(TemperatureGrid::new(lo, hi, points)?)),
        (None, None) => Ok(None),
        _ => Err(CliFailure::invalid(
            "--t-min and --t-max must be given together",
        )),
    }
}

fn run_tune(args: &TuneArgs, manifest: &Command) -> CmdResult {
    init_threads(args.threads);
    note_cosine(args.metric);
    let set = load_support(&args.support, args.format)?;
    let config = TuneConfig {
        mode: tune_mode_of(args)?,
        k: args.k,
        grid: grid_of(args.t_min, args.t_max, args.grid_points)?,
        refine_iters: args.refine_iters,
    };
    let result = tune_temperature(&set, &config, args.metric)?;
    write_json(&args.out_dir, "manifest.json", manifest)?;
    write_json(
        &args.out_dir,
        "tune_result.json",
        &TuneDoc {
            t_star: result.t_star,
            nll_at_t_star: result.nll_at_t_star,
            interior: result.interior,
            mode: args.mode.clone(),
            k: args.k,
            metric: args.metric,
            evaluations: result.nll_curve.len(),
        },
    )?;
    write_text(&args.out_dir, "nll_curve.csv", &result.curve_csv())?;
    println!(
        "t_star={} nll={} interior={}",
        result.t_star, result.nll_at_t_star, result.interior
    );
    Ok(())
}

// --- evaluate ---------------------------------------------------------

#[derive(Serialize)]
struct EvalDoc {
    rule: ScoreRule,
    k: usize,
    temperature: Option<f64>,
    metric: Metric,
    accuracy: f64,
    ece: f64,
    n: usize,
    calibrated_confidence: bool,
    bins: Vec<calibration::ReliabilityBin>,
}

fn predictions_csv(
    ids: &[String],
    predictions: &[Prediction],
    support: &SupportSet,
    full_scores: bool,
) -> String {
    let space = support.label_space();
    let mut out = String::from("query_id,predicted_label,confidence");
    if full_scores {
        for name in space.names() {
            out.push_str(&format!(",score_{name}"));
        }
    }
    out.push('\n');
    for (id, p) in ids.iter().zip(predictions) {
        out.push_str(&format!("{id},{},{}", space.name(p.label), p.confidence));
        if full_scores {
            for s in &p.class_scores {
                out.push_str(&format!(",{s}"));
            }
        }
        out.push('\n');
    }
    out
}

/// Explicit flag, or tuned on the support set for the exponential rule,
/// or an unused placeholder for the vote rules.
fn resolve_temperature(
    set: &SupportSet,
    rule: ScoreRule,
    k: usize,
    explicit: Option<f64>,
    metric: Metric,
) -> Result<f64, CliFailure> {
    match explicit {
        Some(t) => Ok(t),
        None if rule == ScoreRule::Ned => {
            Ok(tune_temperature(set, &TuneConfig::new(k), metric)?.t_star)
        }
        None => Ok(1.0),
    }
}

fn run_evaluate(args: &EvaluateArgs, manifest: &Command) -> CmdResult {
    init_threads(args.threads);
    note_cosine(args.metric);
    let support = load_support(&args.support, args.format)?;
    let (ids, queries, truth) = load_queries(&args.queries, args.format, &support)?;
    let small = support.classes_below(args.k);
    if !small.is_empty() {
        eprintln!(
            "warning: {} class(es) have fewer than k={} support records: {}",
            small.len(),
            args.k,
            small.join(", ")
        );
    }
    let temperature =
        resolve_temperature(&support, args.rule, args.k, args.temperature, args.metric)?;
    let config = ScorerConfig::new(args.rule, args.k, temperature, args.metric)?;
    let (report, predictions) =
        harness::evaluate_run(&support, &queries, &truth, &config, args.bins)?;

    write_json(&args.out_dir, "manifest.json", manifest)?;
    write_text(
        &args.out_dir,
        "predictions.csv",
        &predictions_csv(&ids, &predictions, &support, args.full_scores),
    )?;
    write_json(
        &args.out_dir,
        "report.json",
        &EvalDoc {
            rule: args.rule,
            k: config.k,
            temperature: (args.rule == ScoreRule::Ned).then_some(temperature),
            metric: args.metric,
            accuracy: report.accuracy,
            ece: report.ece,
            n: report.n,
            calibrated_confidence: report.calibrated_confidence,
            bins: report.bins.clone(),
        },
    )?;
    write_text(
        &args.out_dir,
        "reliability.csv",
        &calibration::reliability_csv(&report.bins),
    )?;
    write_text(
        &args.out_dir,
        "reliability.svg",
        &calibration::reliability_svg(
            &report.bins,
            &format!("{} k={} n={}", args.rule, config.k, report.n),
        ),
    )?;
    println!(
        "rule={} k={} n={} accuracy={} ece={}{}",
        args.rule,
        config.k,
        report.n,
        report.accuracy,
        report.ece,
        if args.rule == ScoreRule::Ned {
            format!(" T={temperature}")
        } else {
            String::new()
        }
    );
    Ok(())
}

// --- sweep ------------------------------------------------------------

fn run_sweep(args: &SweepArgs, manifest: &Command) -> CmdResult {
    init_threads(args.threads);
    note_cosine(args.metric);
    let support = load_support(&args.support, args.format)?;
    let (_, queries, truth) = load_queries(&args.queries, args.format, &support)?;
    let dataset = args
        .queries
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "queries".into());

    let report = match args.sweep.as_str() {
        "k" => harness::sweep_k(
            &support,
            &queries,
            &truth,
            &args.rules,
            &args.k,
            args.metric,
            &TuneConfig::new(1),
            args.temperature,
            args.bins,
            args.seed,
            &dataset,
        )?,
        "severity" => {
            let kind = args
                .perturb
                .ok_or_else(|| CliFailure::invalid("--sweep severity requires --perturb"))?;
            let k = args.k[0];
            let temperature =
                resolve_temperature(&support, ScoreRule::Ned, k, args.temperature, args.metric)?;
            harness::sweep_severity(
                &support,
                &queries,
                &truth,
                &args.rules,
                kind,
                k,
                args.metric,
                temperature,
                args.bins,
                args.seed,
                &dataset,
            )?
        }
        other => {
            return Err(CliFailure::invalid(format!(
                "unknown sweep `{other}` (k|severity)"
            )))
        }
    };

    write_json(&args.out_dir, "manifest.json", manifest)?;
    write_text(&args.out_dir, "sweep.csv", &report.to_csv())?;
    print!("{}", report.to_table());
    Ok(())
}

// --- synth ------------------------------------------------------------

fn run_synth(args: &SynthArgs, manifest: &Command) -> CmdResult {
    let spec = MixtureSpec::from_json_file(&args.spec)?;
    let seed = args.seed.unwrap_or(spec.seed);
    let set = match (args.n_per_class, args.n_total) {
        (Some(n), None) => generate_mixture(&spec, n, seed)?,
        (None, Some(n)) => generate_mixture_proportional(&spec, n, seed)?,
        _ => {
            return Err(CliFailure::invalid(
                "exactly one of --n-per-class or --n-total is required",
            ))
        }
    };
    write_json(&args.out_dir, "manifest.json", manifest)?;
    set.write(&args.output, args.output_format)?;
    println!(
        "wrote {} records ({} classes, dim {}) to {}",
        set.len(),
        set.num_classes(),
        set.dim(),
        args.output.display()
    );
    Ok(())
}

// --- rerun ------------------------------------------------------------

fn run_rerun(args: &RerunArgs) -> CmdResult {
    let text = std::fs::read_to_string(&args.manifest)
        .map_err(|e| CliFailure::invalid(format!("{}: {e}", args.manifest.display())))?;
    let command: Command = serde_json::from_str(&text).map_err(|e| {
        CliFailure::invalid(format!("{}: not a manifest: {e}", args.manifest.display()))
    })?;
    dispatch(command)
}
