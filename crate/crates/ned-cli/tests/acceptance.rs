//! Acceptance suite: one test per criterion, each printing a PASS line
//! with its measured numbers (run with `-- --nocapture` to see them).
//!
//! The criteria are property- and oracle-based on the checked-in synthetic
//! benchmarks under `fixtures/` (separable / overlapping / imbalanced
//! Gaussian mixtures, dim 16, fixed seeds). Tests serialize through a
//! mutex so the per-criterion runtime budgets are measured honestly.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Mutex;
use std::time::Instant;

use ned_core::calibration::{ece, EvalOutcome};
use ned_core::harness::{sweep_k, sweep_severity, PerturbKind};
use ned_core::oracle::{
    generate_mixture, generate_mixture_proportional, kde_posterior, true_posterior, KernelSpec,
    MixtureSpec,
};
use ned_core::rng::{stream_rng, Stream};
use ned_core::scorer::{knn_scores, ned_scores, predict};
use ned_core::tuner::{tune_temperature, TuneConfig};
use ned_core::{Metric, ScoreRule, ScorerConfig, SupportSet, VectorIndex};

static SERIAL: Mutex<()> = Mutex::new(());

fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn benchmark(name: &str) -> MixtureSpec {
    MixtureSpec::from_json_file(fixtures_dir().join(format!("{name}.json"))).unwrap()
}

/// Support/query/truth triple for one benchmark. Supports are generated
/// from the spec's own seed, queries from seed + 1; the imbalanced
/// benchmark samples counts proportional to its priors.
fn support_and_queries(
    spec: &MixtureSpec,
    n_support: usize,
    n_query: usize,
) -> (SupportSet, Vec<Vec<f64>>, Vec<usize>) {
    let balanced = spec.classes.iter().all(|c| {
        (c.prior - spec.classes[0].prior).abs() < 1e-12
    });
    let (support, query_set) = if balanced {
        let per_class = n_support / spec.classes.len();
        (
            generate_mixture(spec, per_class, spec.seed).unwrap(),
            generate_mixture(spec, n_query / spec.classes.len(), spec.seed + 1).unwrap(),
        )
    } else {
        (
            generate_mixture_proportional(spec, n_support, spec.seed).unwrap(),
            generate_mixture_proportional(spec, n_query, spec.seed + 1).unwrap(),
        )
    };
    let queries = query_set.records().iter().map(|r| r.vector.clone()).collect();
    let truth = query_set.records().iter().map(|r| r.label).collect();
    (support, queries, truth)
}

/// The 3-class, dim-8, N=300 set used by criteria 1 and 2.
fn small_oracle_set() -> SupportSet {
    let spec = oracle_spec();
    generate_mixture(&spec, 100, spec.seed).unwrap()
}

fn oracle_spec() -> MixtureSpec {
    let identity = |dim: usize| {
        (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect::<Vec<Vec<f64>>>()
    };
    let mean = |axis: Option<usize>| {
        let mut v = vec![0.0; 8];
        if let Some(a) = axis {
            v[a] = 3.0;
        }
        v
    };
    MixtureSpec {
        dim: 8,
        seed: 404,
        classes: vec![
            ned_core::oracle::ClassSpec {
                label: "c0".into(),
                mean: mean(None),
                covariance: identity(8),
                prior: 1.0 / 3.0,
            },
            ned_core::oracle::ClassSpec {
                label: "c1".into(),
                mean: mean(Some(0)),
                covariance: identity(8),
                prior: 1.0 / 3.0,
            },
            ned_core::oracle::ClassSpec {
                label: "c2".into(),
                mean: mean(Some(1)),
                covariance: identity(8),
                prior: 1.0 / 3.0,
            },
        ],
    }
}

fn box_queries(n: usize, dim: usize, lo: f64, hi: f64, seed: u64) -> Vec<Vec<f64>> {
    use rand::Rng;
    let mut rng = stream_rng(seed, Stream::Diagnostic, 0);
    (0..n)
        .map(|_| (0..dim).map(|_| lo + (hi - lo) * rng.gen::<f64>()).collect())
        .collect()
}

#[test]
fn criterion_1_oracle_identity() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();

    let set = small_oracle_set();
    assert_eq!(set.len(), 300);
    let index = VectorIndex::build(&set, Metric::SquaredEuclidean).unwrap();
    let temperature = 1.3;
    let kernel = KernelSpec::SharedAlpha(temperature / 2.0);
    let queries = box_queries(1000, 8, -4.0, 7.0, 405);

    let mut max_dev: f64 = 0.0;
    for q in &queries {
        let nn = index.query_knn(q, set.len()).unwrap();
        let labels: Vec<usize> = nn.entries().iter().map(|n| index.label_of(n.index)).collect();
        let scores = ned_scores(&nn, &labels, temperature, set.num_classes());
        let posterior = kde_posterior(&set, q, &kernel).unwrap();
        for (s, p) in scores.iter().zip(&posterior) {
            max_dev = max_dev.max((s - p).abs());
        }
    }
    let elapsed = start.elapsed();
    assert!(
        max_dev < 1e-12,
        "max per-class deviation {max_dev} exceeds 1e-12"
    );
    assert!(elapsed.as_secs_f64() < 10.0, "runtime {elapsed:?} over 10 s");
    println!(
        "criterion 1 (oracle identity): PASS — max deviation {max_dev:.3e} over 1000 queries, {:.2?}",
        elapsed
    );
}

#[test]
fn criterion_2_limit_laws() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();

    let set = small_oracle_set();
    let index = VectorIndex::build(&set, Metric::SquaredEuclidean).unwrap();
    let queries = box_queries(1000, 8, -4.0, 7.0, 406);
    let k = 16;

    let mut strict = 0usize;
    let mut small_t_matches = 0usize;
    let mut max_large_t_dev: f64 = 0.0;
    for q in &queries {
        let nn = index.query_knn(q, k).unwrap();
        let entries = nn.entries();
        let labels: Vec<usize> = entries.iter().map(|n| index.label_of(n.index)).collect();
        let mean_d = nn.mean_distance();

        if entries[0].distance < entries[1].distance {
            strict += 1;
            let scores = ned_scores(&nn, &labels, 1e-6 * mean_d, set.num_classes());
            let predicted = argmax(&scores);
            if predicted == labels[0] {
                small_t_matches += 1;
            }
        }

        let scores = ned_scores(&nn, &labels, 1e6 * mean_d, set.num_classes());
        let votes = knn_scores(&labels, set.num_classes());
        for (s, v) in scores.iter().zip(&votes) {
            max_large_t_dev = max_large_t_dev.max((s - v).abs());
        }
    }
    let elapsed = start.elapsed();
    assert!(strict > 900, "strict-nearest queries unexpectedly rare");
    assert_eq!(
        small_t_matches, strict,
        "T -> 0 limit must match the nearest label on 100% of strict queries"
    );
    assert!(
        max_large_t_dev < 1e-4,
        "T -> inf deviation {max_large_t_dev} exceeds 1e-4"
    );
    assert!(elapsed.as_secs_f64() < 5.0, "runtime {elapsed:?} over 5 s");
    println!(
        "criterion 2 (limit laws): PASS — {strict}/{strict} nearest-label matches at T=1e-6*d, \
         max kNN deviation {max_large_t_dev:.3e} at T=1e6*d, {elapsed:.2?}"
    );
}

#[test]
fn criterion_3_calibration_ordering() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let k = 128;

    let mut lines = Vec::new();
    for name in ["separable", "overlapping", "imbalanced"] {
        let spec = benchmark(name);
        let (support, queries, truth) = support_and_queries(&spec, 2000, 2000);
        let tune = tune_temperature(&support, &TuneConfig::new(k), Metric::SquaredEuclidean)
            .unwrap();
        let mut eces = std::collections::HashMap::new();
        for rule in [ScoreRule::Ned, ScoreRule::Knn, ScoreRule::WknnA, ScoreRule::WknnB] {
            let config = ScorerConfig::new(rule, k, tune.t_star, Metric::SquaredEuclidean)
                .unwrap();
            let (report, _) =
                ned_core::harness::evaluate_run(&support, &queries, &truth, &config, 10)
                    .unwrap();
            eces.insert(rule, report.ece);
        }
        let ned = eces[&ScoreRule::Ned];
        for rule in [ScoreRule::Knn, ScoreRule::WknnA, ScoreRule::WknnB] {
            assert!(
                ned < eces[&rule],
                "{name}: ECE(ned)={ned} not strictly below ECE({rule})={}",
                eces[&rule]
            );
        }
        assert!(
            tune.interior,
            "{name}: tuner left its bracket (t_star {})",
            tune.t_star
        );
        assert!(ned < 0.05, "{name}: ECE(ned)={ned} not below 0.05");
        lines.push(format!(
            "{name}: ece ned={ned:.4} knn={:.4} wknn-a={:.4} wknn-b={:.4} (T={:.3})",
            eces[&ScoreRule::Knn],
            eces[&ScoreRule::WknnA],
            eces[&ScoreRule::WknnB],
            tune.t_star
        ));
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "runtime {elapsed:?} over 60 s");
    println!(
        "criterion 3 (calibration ordering): PASS — {}; {elapsed:.2?}",
        lines.join("; ")
    );
}

#[test]
fn criterion_4_posterior_consistency() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();

    let spec = benchmark("overlapping");
    // 500 test points from the mixture, fixed seed.
    let test_set = generate_mixture(&spec, 250, spec.seed + 7777).unwrap();
    let test_points: Vec<Vec<f64>> =
        test_set.records().iter().map(|r| r.vector.clone()).collect();
    let bayes: Vec<Vec<f64>> = test_points
        .iter()
        .map(|z| true_posterior(&spec, z).unwrap())
        .collect();

    let mut maes = Vec::new();
    for n_per_class in [25usize, 100, 400, 1600] {
        // Seed schedule: spec seed offset by the sample size.
        let support =
            generate_mixture(&spec, n_per_class, spec.seed + n_per_class as u64).unwrap();
        let n = support.len();
        // Full-neighborhood leave-one-out tuning; a trimmed grid keeps the
        // largest level inside the runtime budget.
        let tune = tune_temperature(
            &support,
            &TuneConfig {
                grid: Some(
                    ned_core::tuner::TemperatureGrid::new(1e-2, 1e4, 16).unwrap(),
                ),
                refine_iters: 12,
                ..TuneConfig::new(n - 1)
            },
            Metric::SquaredEuclidean,
        )
        .unwrap();
        let index = VectorIndex::build(&support, Metric::SquaredEuclidean).unwrap();
        let config =
            ScorerConfig::new(ScoreRule::Ned, n, tune.t_star, Metric::SquaredEuclidean).unwrap();
        let mut total = 0.0;
        for (z, truth) in test_points.iter().zip(&bayes) {
            let p = predict(&index, z, &config).unwrap();
            total += p
                .class_scores
                .iter()
                .zip(truth)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
                / truth.len() as f64;
        }
        maes.push(total / test_points.len() as f64);
    }
    let elapsed = start.elapsed();

    // Monotone decrease allowing one inversion for sampling noise.
    let inversions = maes.windows(2).filter(|w| w[1] >= w[0]).count();
    assert!(
        inversions <= 1,
        "MAE sequence {maes:?} has {inversions} inversions"
    );
    assert!(
        maes.last().unwrap() < maes.first().unwrap(),
        "MAE did not decrease overall: {maes:?}"
    );
    assert!(
        *maes.last().unwrap() < 0.05,
        "final MAE {} not below 0.05",
        maes.last().unwrap()
    );
    assert!(elapsed.as_secs_f64() < 120.0, "runtime {elapsed:?} over 120 s");
    println!(
        "criterion 4 (posterior consistency): PASS — MAE {:?} over n/class {{25,100,400,1600}}, {elapsed:.2?}",
        maes.iter().map(|m| format!("{m:.4}")).collect::<Vec<_>>()
    );
}

#[test]
fn criterion_5_k_sensitivity_shape() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();

    let spec = benchmark("overlapping");
    let (support, queries, truth) = support_and_queries(&spec, 2000, 2000);
    // Small k are swept to locate kNN's best k; the NED variation is
    // judged on the pinned set {32, 64, 128, 256}.
    let k_values = [8usize, 16, 32, 64, 128, 256];
    let report = sweep_k(
        &support,
        &queries,
        &truth,
        &[ScoreRule::Ned, ScoreRule::Knn],
        &k_values,
        Metric::SquaredEuclidean,
        &TuneConfig::new(1),
        None,
        10,
        spec.seed,
        "overlapping",
    )
    .unwrap();

    let acc = |rule: ScoreRule, k: usize| {
        report
            .rows
            .iter()
            .find(|r| r.rule == rule && r.k == k)
            .map(|r| r.accuracy)
            .unwrap()
    };
    let ned_accs: Vec<f64> = [32, 64, 128, 256]
        .iter()
        .map(|&k| acc(ScoreRule::Ned, k))
        .collect();
    let ned_spread = ned_accs.iter().cloned().fold(f64::MIN, f64::max)
        - ned_accs.iter().cloned().fold(f64::MAX, f64::min);
    let knn_best = k_values
        .iter()
        .map(|&k| acc(ScoreRule::Knn, k))
        .fold(f64::MIN, f64::max);
    let knn_at_256 = acc(ScoreRule::Knn, 256);
    let elapsed = start.elapsed();

    assert!(
        ned_spread < 0.01,
        "NED accuracy varies by {ned_spread} (>= 1 point) across k in {{32..256}}: {ned_accs:?}"
    );
    assert!(
        knn_best - knn_at_256 > 0.02,
        "kNN at k=256 ({knn_at_256}) is not >2 points below its best ({knn_best})"
    );
    assert!(elapsed.as_secs_f64() < 60.0, "runtime {elapsed:?} over 60 s");
    println!(
        "criterion 5 (k-sensitivity shape): PASS — NED spread {:.4} across k={{32..256}}, \
         kNN best {:.4} vs k=256 {:.4}, {elapsed:.2?}",
        ned_spread, knn_best, knn_at_256
    );
}

#[test]
fn criterion_6_robustness_ordering() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let k = 128;

    let spec = benchmark("separable");
    let (support, queries, truth) = support_and_queries(&spec, 2000, 2000);
    // T tuned on the clean support set, reused unchanged at every severity.
    let tune =
        tune_temperature(&support, &TuneConfig::new(k), Metric::SquaredEuclidean).unwrap();
    let report = sweep_severity(
        &support,
        &queries,
        &truth,
        &ScoreRule::ALL,
        PerturbKind::Gaussian,
        k,
        Metric::SquaredEuclidean,
        tune.t_star,
        10,
        spec.seed,
        "separable",
    )
    .unwrap();

    let avg = |rule: ScoreRule| {
        let rows: Vec<_> = report.rows.iter().filter(|r| r.rule == rule).collect();
        let acc = rows.iter().map(|r| r.accuracy).sum::<f64>() / rows.len() as f64;
        let eces: Vec<f64> = rows.iter().filter_map(|r| r.ece).collect();
        let ece = eces.iter().sum::<f64>() / eces.len().max(1) as f64;
        (acc, ece)
    };
    let (ned_acc, ned_ece) = avg(ScoreRule::Ned);
    let (one_nn_acc, _) = avg(ScoreRule::OneNn);
    let elapsed = start.elapsed();

    for rule in [ScoreRule::Knn, ScoreRule::WknnA, ScoreRule::WknnB] {
        let (_, other_ece) = avg(rule);
        assert!(
            ned_ece < other_ece,
            "averaged ECE(ned)={ned_ece} not below ECE({rule})={other_ece}"
        );
    }
    assert!(
        ned_acc >= one_nn_acc,
        "averaged accuracy(ned)={ned_acc} below 1nn={one_nn_acc}"
    );
    assert!(elapsed.as_secs_f64() < 120.0, "runtime {elapsed:?} over 120 s");
    println!(
        "criterion 6 (robustness ordering): PASS — avg ECE ned={ned_ece:.4}, avg acc \
         ned={ned_acc:.4} vs 1nn={one_nn_acc:.4}, {elapsed:.2?}"
    );
}

#[test]
fn criterion_7_ece_unit_correctness() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());

    // Hand-computed fixtures.
    let outcome = |confidence: f64, correct: bool| EvalOutcome {
        confidence,
        predicted: 0,
        actual: usize::from(!correct),
    };
    let mut half = vec![outcome(1.0, true); 5];
    half.extend(vec![outcome(1.0, false); 5]);
    assert_eq!(ece(&half, 10).unwrap(), 0.5, "all-confident/half-correct");
    let perfect = vec![outcome(1.0, true); 8];
    assert_eq!(ece(&perfect, 10).unwrap(), 0.0, "perfect predictor");
    let two = vec![outcome(0.95, true), outcome(0.92, false)];
    let bins = ned_core::calibration::reliability_bins(&two, 10).unwrap();
    assert_eq!(bins[9].count, 2);
    assert_eq!(bins[9].mean_conf, 0.935);
    assert_eq!(bins[9].accuracy, 0.5);

    // CLI round trip: ECE recomposed from the exported reliability CSV
    // must match report.json to the last printed digit.
    let dir = tempfile::tempdir().unwrap();
    let spec_path = fixtures_dir().join("overlapping.json");
    let support = dir.path().join("s.jsonl");
    let queries = dir.path().join("q.jsonl");
    run_ned(&[
        "synth", "--spec", p(&spec_path), "--n-per-class", "150",
        "--output", p(&support), "--out-dir", p(&dir.path().join("m1")),
    ]);
    run_ned(&[
        "synth", "--spec", p(&spec_path), "--n-per-class", "100", "--seed", "9",
        "--output", p(&queries), "--out-dir", p(&dir.path().join("m2")),
    ]);
    let out = dir.path().join("eval");
    run_ned(&[
        "evaluate", "--support", p(&support), "--queries", p(&queries),
        "--rule", "ned", "--k", "16", "--out-dir", p(&out),
    ]);

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap())
            .unwrap();
    let reported_ece = report["ece"].as_f64().unwrap();
    let n = report["n"].as_u64().unwrap() as f64;

    let csv = std::fs::read_to_string(out.join("reliability.csv")).unwrap();
    let mut recomposed = 0.0;
    for line in csv.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let count: f64 = fields[2].parse().unwrap();
        let mean_conf: f64 = fields[3].parse().unwrap();
        let accuracy: f64 = fields[4].parse().unwrap();
        recomposed += count * (accuracy - mean_conf).abs();
    }
    recomposed /= n;
    assert_eq!(
        recomposed.to_bits(),
        reported_ece.to_bits(),
        "CSV-recomposed ECE {recomposed} != report.json {reported_ece}"
    );
    println!(
        "criterion 7 (ECE unit correctness): PASS — fixtures exact, CSV recomposition \
         bit-identical ({reported_ece})"
    );
}

#[test]
fn criterion_8_determinism_and_reproducibility() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());

    let dir = tempfile::tempdir().unwrap();
    let spec_src = fixtures_dir().join("overlapping.json");
    let spec_path = dir.path().join("mix.json");
    std::fs::copy(&spec_src, &spec_path).unwrap();

    let support = dir.path().join("support.jsonl");
    let support_bin = dir.path().join("support.bin");
    let queries = dir.path().join("queries.jsonl");

    // One run of every command, each with its own out dir.
    let synth_out = dir.path().join("out-synth");
    run_ned(&[
        "synth", "--spec", p(&spec_path), "--n-per-class", "120",
        "--output", p(&support), "--out-dir", p(&synth_out),
    ]);
    run_ned(&[
        "synth", "--spec", p(&spec_path), "--n-per-class", "80", "--seed", "11",
        "--output", p(&queries), "--out-dir", p(&dir.path().join("out-synth-q")),
    ]);
    let ingest_out = dir.path().join("out-ingest");
    run_ned(&[
        "ingest", "--input", p(&support), "--output", p(&support_bin),
        "--out-dir", p(&ingest_out),
    ]);
    let tune_out = dir.path().join("out-tune");
    run_ned(&[
        "tune", "--support", p(&support), "--k", "8", "--mode", "holdout",
        "--fraction", "0.2", "--seed", "7", "--out-dir", p(&tune_out),
    ]);
    let eval_out = dir.path().join("out-eval");
    run_ned(&[
        "evaluate", "--support", p(&support), "--queries", p(&queries),
        "--rule", "ned", "--k", "8", "--full-scores", "--out-dir", p(&eval_out),
    ]);
    let sweep_out = dir.path().join("out-sweep");
    run_ned(&[
        "sweep", "--support", p(&support), "--queries", p(&queries),
        "--sweep", "severity", "--perturb", "gaussian", "--k", "8",
        "--seed", "3", "--out-dir", p(&sweep_out),
    ]);

    // Snapshot, rerun every manifest, compare bytes.
    let out_dirs = [&synth_out, &ingest_out, &tune_out, &eval_out, &sweep_out];
    let mut snapshots = Vec::new();
    for out in &out_dirs {
        snapshots.push(dir_bytes(out));
    }
    let generated = [support.clone(), support_bin.clone()];
    let generated_before: Vec<Vec<u8>> =
        generated.iter().map(|f| std::fs::read(f).unwrap()).collect();

    for out in &out_dirs {
        run_ned(&["rerun", p(&out.join("manifest.json"))]);
    }
    for (out, before) in out_dirs.iter().zip(&snapshots) {
        let after = dir_bytes(out);
        assert_eq!(
            before, &after,
            "{}: rerun changed bytes",
            out.display()
        );
    }
    for (file, before) in generated.iter().zip(&generated_before) {
        let after = std::fs::read(file).unwrap();
        assert_eq!(before, &after, "{}: rerun changed bytes", file.display());
    }

    // Parallel vs single-threaded prediction CSVs are byte-identical.
    let eval_t1 = dir.path().join("out-eval-t1");
    run_ned(&[
        "evaluate", "--support", p(&support), "--queries", p(&queries),
        "--rule", "ned", "--k", "8", "--full-scores", "--threads", "1",
        "--out-dir", p(&eval_t1),
    ]);
    let a = std::fs::read(eval_out.join("predictions.csv")).unwrap();
    let b = std::fs::read(eval_t1.join("predictions.csv")).unwrap();
    assert_eq!(a, b, "threaded and serial prediction CSVs differ");

    println!(
        "criterion 8 (determinism): PASS — 5 commands re-ran byte-identically from their \
         manifests; --threads 1 matches default"
    );
}

#[test]
fn criterion_9_retrieval_exactness() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();

    use rand::Rng;
    let spec = oracle_spec();
    let set = generate_mixture(&spec, 134, 505).unwrap(); // N = 402
    let index = VectorIndex::build(&set, Metric::SquaredEuclidean).unwrap();
    let mut rng = stream_rng(506, Stream::Diagnostic, 1);
    let mut mismatches = 0usize;
    for _ in 0..10_000 {
        let q: Vec<f64> = (0..8).map(|_| rng.gen::<f64>() * 10.0 - 4.0).collect();
        let k = rng.gen_range(1..=set.len());
        let fast = index.query_knn(&q, k).unwrap();
        let reference = index.query_knn_reference(&q, k).unwrap();
        if fast != reference {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    assert_eq!(mismatches, 0, "{mismatches} of 10000 query/k pairs differ");
    println!(
        "criterion 9 (retrieval exactness): PASS — 10000 randomized query/k pairs, zero \
         mismatches, {elapsed:.2?}"
    );
}

// --- helpers ------------------------------------------------------------

fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (j, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = j;
        }
    }
    best
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn run_ned(args: &[&str]) {
    let output = Command::new(env!("CARGO_BIN_EXE_ned"))
        .args(args)
        .output()
        .expect("failed to spawn ned");
    assert!(
        output.status.success(),
        "ned {:?} failed: {}",
        args,
        String::from_utf8_lossy(&output.stderr)
    );
}

/// All regular files in a directory, as (name, bytes), sorted.
fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}
