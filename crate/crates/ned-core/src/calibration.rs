//! Accuracy, expected calibration error, and reliability diagrams.
//!
//! Bins are equal-width over [0, 1]; bin m covers ((m-1)/M, m/M] with 0
//! folded into the first bin, so every confidence lands in exactly one
//! bin. ECE is always recomputed from the bin list, which keeps the
//! reported number and the exported diagram consistent by construction.

use serde::{Deserialize, Serialize};

use crate::error::{NedError, Result};

/// One scored prediction paired with its true label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOutcome {
    pub confidence: f64,
    pub predicted: usize,
    pub actual: usize,
}

impl EvalOutcome {
    pub fn correct(&self) -> bool {
        self.predicted == self.actual
    }
}

/// One reliability-diagram bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub mean_conf: f64,
    pub accuracy: f64,
}

/// Summary of one evaluation: overall accuracy, ECE, and the bins the ECE
/// was computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub accuracy: f64,
    pub ece: f64,
    pub n: usize,
    /// False when the scorer's confidences are placeholders (1-NN).
    pub calibrated_confidence: bool,
    pub bins: Vec<ReliabilityBin>,
}

/// Fraction of outcomes with `predicted == actual`.
pub fn accuracy(outcomes: &[EvalOutcome]) -> Result<f64> {
    if outcomes.is_empty() {
        return Err(NedError::EmptySet);
    }
    let correct = outcomes.iter().filter(|o| o.correct()).count();
    Ok(correct as f64 / outcomes.len() as f64)
}

fn bin_of(confidence: f64, num_bins: usize) -> usize {
    assert!(
        (0.0..=1.0).contains(&confidence),
        "confidence {confidence} outside [0, 1]"
    );
    if confidence <= 0.0 {
        return 0;
    }
    let idx = (confidence * num_bins as f64).ceil() as usize;
    idx.min(num_bins) - 1
}

/// Equal-width reliability bins; empty bins are reported with count 0 and
/// zero mean confidence and accuracy.
pub fn reliability_bins(outcomes: &[EvalOutcome], num_bins: usize) -> Result<Vec<ReliabilityBin>> {
    if outcomes.is_empty() {
        return Err(NedError::EmptySet);
    }
    if num_bins < 2 {
        return Err(NedError::config("bin count must be at least 2"));
    }
    let mut counts = vec![0usize; num_bins];
    let mut conf_sums = vec![0.0f64; num_bins];
    let mut correct = vec![0usize; num_bins];
    for o in outcomes {
        let b = bin_of(o.confidence, num_bins);
        counts[b] += 1;
        conf_sums[b] += o.confidence;
        correct[b] += usize::from(o.correct());
    }
    Ok((0..num_bins)
        .map(|b| {
            let count = counts[b];
            ReliabilityBin {
                lo: b as f64 / num_bins as f64,
                hi: (b + 1) as f64 / num_bins as f64,
                count,
                mean_conf: if count > 0 {
                    conf_sums[b] / count as f64
                } else {
                    0.0
                },
                accuracy: if count > 0 {
                    correct[b] as f64 / count as f64
                } else {
                    0.0
                },
            }
        })
        .collect())
}

/// `ECE = (1/N) Σ_m |B_m| |acc(B_m) - conf(B_m)|` over the given bins.
pub fn ece_from_bins(bins: &[ReliabilityBin], n: usize) -> f64 {
    bins.iter()
        .map(|b| b.count as f64 * (b.accuracy - b.mean_conf).abs())
        .sum::<f64>()
        / n as f64
}

/// Expected calibration error over equal-width bins.
pub fn ece(outcomes: &[EvalOutcome], num_bins: usize) -> Result<f64> {
    let bins = reliability_bins(outcomes, num_bins)?;
    Ok(ece_from_bins(&bins, outcomes.len()))
}

/// Accuracy, ECE, and bins in one pass.
pub fn report(
    outcomes: &[EvalOutcome],
    num_bins: usize,
    calibrated_confidence: bool,
) -> Result<CalibrationReport> {
    let bins = reliability_bins(outcomes, num_bins)?;
    Ok(CalibrationReport {
        accuracy: accuracy(outcomes)?,
        ece: ece_from_bins(&bins, outcomes.len()),
        n: outcomes.len(),
        calibrated_confidence,
        bins,
    })
}

/// CSV export of the bin list, full round-trip float precision.
pub fn reliability_csv(bins: &[ReliabilityBin]) -> String {
    let mut out = String::from("bin_lo,bin_hi,count,mean_conf,accuracy\n");
    for b in bins {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            b.lo, b.hi, b.count, b.mean_conf, b.accuracy
        ));
    }
    out
}

/// Reliability diagram as a standalone SVG: per-bin accuracy bars against
/// the perfect-calibration diagonal, with mean-confidence ticks.
pub fn reliability_svg(bins: &[ReliabilityBin], title: &str) -> String {
    const W: f64 = 440.0;
    const H: f64 = 440.0;
    const M: f64 = 50.0; // margin
    let plot = W - 2.0 * M;
    let x = |v: f64| M + v * plot;
    let y = |v: f64| H - M - v * plot;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"14\" \
         font-family=\"sans-serif\">{title}</text>\n",
        W / 2.0,
        M / 2.0
    ));
    // Bars.
    for b in bins {
        if b.count == 0 {
            continue;
        }
        svg.push_str(&format!(
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" \
             fill=\"#4878a8\" stroke=\"#22303c\" stroke-width=\"0.5\"/>\n",
            x(b.lo),
            y(b.accuracy),
            (b.hi - b.lo) * plot,
            (y(0.0) - y(b.accuracy)).max(0.0)
        ));
        // Mean-confidence tick inside the bar's bin.
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" \
             stroke=\"#c05050\" stroke-width=\"1.5\"/>\n",
            x(b.mean_conf),
            y(0.0),
            x(b.mean_conf),
            y(0.04)
        ));
    }
    // Diagonal reference.
    svg.push_str(&format!(
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" \
         stroke=\"#707070\" stroke-dasharray=\"5,4\" stroke-width=\"1\"/>\n",
        x(0.0),
        y(0.0),
        x(1.0),
        y(1.0)
    ));
    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n\
         <line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        x(0.0),
        y(0.0),
        x(1.0),
        y(0.0),
        x(0.0),
        y(0.0),
        x(0.0),
        y(1.0)
    ));
    for tick in 0..=5 {
        let v = tick as f64 / 5.0;
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"10\" \
             font-family=\"sans-serif\">{v:.1}</text>\n",
            x(v),
            y(0.0) + 16.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-size=\"10\" \
             font-family=\"sans-serif\">{v:.1}</text>\n",
            x(0.0) - 6.0,
            y(v) + 3.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"12\" \
         font-family=\"sans-serif\">confidence</text>\n",
        W / 2.0,
        H - 10.0
    ));
    svg.push_str(&format!(
        "<text x=\"14\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"12\" \
         font-family=\"sans-serif\" transform=\"rotate(-90 14 {:.1})\">accuracy</text>\n",
        H / 2.0,
        H / 2.0
    ));
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(confidence: f64, correct: bool) -> EvalOutcome {
        EvalOutcome {
            confidence,
            predicted: 0,
            actual: usize::from(!correct),
        }
    }

    #[test]
    fn accuracy_counting() {
        let all = vec![outcome(0.9, true); 4];
        assert_eq!(accuracy(&all).unwrap(), 1.0);
        let none = vec![outcome(0.9, false); 4];
        assert_eq!(accuracy(&none).unwrap(), 0.0);
        let mixed = vec![
            outcome(0.9, true),
            outcome(0.9, true),
            outcome(0.9, true),
            outcome(0.9, false),
        ];
        assert_eq!(accuracy(&mixed).unwrap(), 0.75);
        assert!(matches!(accuracy(&[]), Err(NedError::EmptySet)));
    }

    #[test]
    fn two_outcome_top_bin() {
        let outcomes = vec![outcome(0.95, true), outcome(0.92, false)];
        let bins = reliability_bins(&outcomes, 10).unwrap();
        let top = &bins[9];
        assert_eq!(top.count, 2);
        assert!((top.mean_conf - 0.935).abs() < 1e-12);
        assert!((top.accuracy - 0.5).abs() < 1e-12);
        assert_eq!(bins.iter().map(|b| b.count).sum::<usize>(), 2);
    }

    #[test]
    fn fully_confident_fully_correct() {
        let outcomes = vec![outcome(1.0, true); 7];
        let bins = reliability_bins(&outcomes, 10).unwrap();
        assert_eq!(bins[9].count, 7);
        assert_eq!(bins[9].mean_conf, 1.0);
        assert_eq!(bins[9].accuracy, 1.0);
        assert!(bins[..9].iter().all(|b| b.count == 0));
        assert_eq!(ece(&outcomes, 10).unwrap(), 0.0);
    }

    #[test]
    fn interior_edge_goes_to_lower_bin() {
        // Left-open, right-closed: confidence exactly m/M belongs to bin m.
        assert_eq!(bin_of(0.5, 10), 4); // bin 5 of 10, 0-indexed 4
        assert_eq!(bin_of(0.25, 4), 0);
        assert_eq!(bin_of(0.75, 4), 2);
        assert_eq!(bin_of(0.0, 10), 0);
        assert_eq!(bin_of(1.0, 10), 9);
        assert_eq!(bin_of(0.5000001, 10), 5);
    }

    #[test]
    fn ece_half_correct_fully_confident() {
        let mut outcomes = vec![outcome(1.0, true); 5];
        outcomes.extend(vec![outcome(1.0, false); 5]);
        assert!((ece(&outcomes, 10).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ece_matches_bin_recomputation_exactly() {
        let outcomes: Vec<EvalOutcome> = (0..500)
            .map(|i| {
                let c = (i as f64 * 0.618033988) % 1.0;
                outcome(c, i % 3 != 0)
            })
            .collect();
        let direct = ece(&outcomes, 10).unwrap();
        let bins = reliability_bins(&outcomes, 10).unwrap();
        assert_eq!(direct.to_bits(), ece_from_bins(&bins, outcomes.len()).to_bits());
    }

    #[test]
    fn ece_of_calibrated_simulation_is_small() {
        // Confidence equals the true per-sample correctness probability.
        use rand::Rng;
        let mut rng = crate::rng::stream_rng(11, crate::rng::Stream::Diagnostic, 1);
        let outcomes: Vec<EvalOutcome> = (0..10_000)
            .map(|_| {
                let c: f64 = 0.5 + 0.5 * rng.gen::<f64>();
                outcome(c, rng.gen::<f64>() < c)
            })
            .collect();
        let e = ece(&outcomes, 10).unwrap();
        assert!(e < 0.02, "ECE {e} should be within sampling noise of 0");
    }

    #[test]
    fn merged_bins_are_additive() {
        let a: Vec<EvalOutcome> = (0..200)
            .map(|i| outcome((i as f64 * 0.37) % 1.0, i % 2 == 0))
            .collect();
        let b: Vec<EvalOutcome> = (0..300)
            .map(|i| outcome((i as f64 * 0.71) % 1.0, i % 5 != 0))
            .collect();
        let merged: Vec<EvalOutcome> = a.iter().chain(b.iter()).copied().collect();
        let bins_a = reliability_bins(&a, 10).unwrap();
        let bins_b = reliability_bins(&b, 10).unwrap();
        let bins_m = reliability_bins(&merged, 10).unwrap();
        for ((ba, bb), bm) in bins_a.iter().zip(&bins_b).zip(&bins_m) {
            assert_eq!(ba.count + bb.count, bm.count);
            let sum_conf = ba.mean_conf * ba.count as f64 + bb.mean_conf * bb.count as f64;
            assert!((sum_conf - bm.mean_conf * bm.count as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn report_is_consistent() {
        let outcomes: Vec<EvalOutcome> = (0..100)
            .map(|i| outcome((i as f64 + 0.5) / 100.0, i % 4 != 0))
            .collect();
        let rep = report(&outcomes, 10, true).unwrap();
        assert_eq!(rep.n, 100);
        assert_eq!(rep.bins.iter().map(|b| b.count).sum::<usize>(), 100);
        assert_eq!(rep.ece, ece_from_bins(&rep.bins, rep.n));
        assert!(rep.ece >= 0.0 && rep.ece <= 1.0);
    }

    #[test]
    fn csv_and_svg_render() {
        let outcomes = vec![outcome(0.95, true), outcome(0.4, false)];
        let bins = reliability_bins(&outcomes, 10).unwrap();
        let csv = reliability_csv(&bins);
        assert!(csv.starts_with("bin_lo,bin_hi,count,mean_conf,accuracy\n"));
        assert_eq!(csv.lines().count(), 11);
        let svg = reliability_svg(&bins, "test");
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("</svg>"));
    }
}
