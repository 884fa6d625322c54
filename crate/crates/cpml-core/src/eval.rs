//! ROC analysis: threshold-sweep curve construction, trapezoidal AUC (equal
//! to the Mann–Whitney rank statistic under the tie-group convention),
//! thresholded accuracy, and the per-model report files.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::ryu_format;
use crate::error::{Error, Result};

/// ROC curve as aligned point/threshold lists: `points[k]` is the
/// (FPR, TPR) reached by classifying positive at `score >= thresholds[k]`.
/// `thresholds[0]` is +∞, so the curve starts at exactly (0, 0) and ends at
/// exactly (1, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<(f64, f64)>,
    pub thresholds: Vec<f64>,
}

impl RocCurve {
    /// Trapezoidal area under the curve.
    pub fn auc(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
            .sum()
    }
}

fn validate_scored(scores: &[f64], labels: &[u8]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            actual: labels.len(),
        });
    }
    if scores.is_empty() {
        return Err(Error::EmptyInput);
    }
    for (i, &s) in scores.iter().enumerate() {
        if !s.is_finite() {
            return Err(Error::Config(format!("score at index {i} is not finite")));
        }
    }
    for (i, &l) in labels.iter().enumerate() {
        if l > 1 {
            return Err(Error::Config(format!(
                "label at index {i} is {l}, expected 0 or 1"
            )));
        }
    }
    Ok(())
}

/// Sweeps the decision threshold over every distinct score, descending.
/// Tied scores move the operating point in one step, producing a diagonal
/// segment; FPR is 1 − specificity.
pub fn roc_curve(scores: &[f64], labels: &[u8]) -> Result<RocCurve> {
    validate_scored(scores, labels)?;
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![(0.0, 0.0)];
    let mut thresholds = vec![f64::INFINITY];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut k = 0;
    while k < order.len() {
        let group_score = scores[order[k]];
        while k < order.len() && scores[order[k]] == group_score {
            if labels[order[k]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        points.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
        thresholds.push(group_score);
    }
    Ok(RocCurve { points, thresholds })
}

/// Area under the ROC curve for raw scores.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    Ok(roc_curve(scores, labels)?.auc())
}

/// Fraction of records where `score >= threshold` agrees with the label.
pub fn accuracy(scores: &[f64], labels: &[u8], threshold: f64) -> Result<f64> {
    validate_scored(scores, labels)?;
    let correct = scores
        .iter()
        .zip(labels)
        .filter(|&(&s, &l)| u8::from(s >= threshold) == l)
        .count();
    Ok(correct as f64 / scores.len() as f64)
}

/// One model's validation-set results plus the provenance stamps every
/// artifact carries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalReport {
    pub model_type: String,
    pub auc: f64,
    pub accuracy: f64,
    pub n_pos: usize,
    pub n_neg: usize,
    pub seed: u64,
    pub config_digest: String,
}

/// The combined summary for one seed: every trained model's report, keyed by
/// model type so the layout is stable across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedSummary {
    pub seed: u64,
    pub config_digest: String,
    pub reports: BTreeMap<String, EvalReport>,
}

impl SeedSummary {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<SeedSummary> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Writes the curve as `threshold,fpr,tpr` rows, one per point. The leading
/// +∞ threshold is spelled `inf`, which `read_roc_csv` and `str::parse`
/// both accept.
pub fn write_roc_csv(path: &Path, curve: &RocCurve) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer
        .write_record(["threshold", "fpr", "tpr"])
        .map_err(|e| csv_error(path, 1, e.to_string()))?;
    for (i, (&threshold, &(fpr, tpr))) in curve.thresholds.iter().zip(&curve.points).enumerate() {
        writer
            .write_record([
                ryu_format(threshold),
                ryu_format(fpr),
                ryu_format(tpr),
            ])
            .map_err(|e| csv_error(path, i + 2, e.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads a curve written by `write_roc_csv`; values round-trip exactly.
pub fn read_roc_csv(path: &Path) -> Result<RocCurve> {
    let mut reader = csv::ReaderBuilder::new().from_path(path)?;
    {
        let header = reader
            .headers()
            .map_err(|e| csv_error(path, 1, e.to_string()))?;
        let got: Vec<&str> = header.iter().collect();
        if got != ["threshold", "fpr", "tpr"] {
            return Err(csv_error(path, 1, format!("unexpected header {:?}", got)));
        }
    }
    let mut curve = RocCurve {
        points: Vec::new(),
        thresholds: Vec::new(),
    };
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 2;
        let row = row.map_err(|e| csv_error(path, row_no, e.to_string()))?;
        if row.len() != 3 {
            return Err(csv_error(
                path,
                row_no,
                format!("expected 3 fields, got {}", row.len()),
            ));
        }
        let mut parsed = [0.0f64; 3];
        for (slot, field) in parsed.iter_mut().zip(row.iter()) {
            *slot = field
                .parse()
                .map_err(|_| csv_error(path, row_no, format!("non-numeric field {:?}", field)))?;
        }
        curve.thresholds.push(parsed[0]);
        curve.points.push((parsed[1], parsed[2]));
    }
    if curve.points.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(curve)
}

fn csv_error(path: &Path, row: usize, message: String) -> Error {
    Error::Csv {
        file: path.display().to_string(),
        row,
        message,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct pairwise concordance count, ties at half credit.
    fn mann_whitney(scores: &[f64], labels: &[u8]) -> f64 {
        let pos: Vec<f64> = scores
            .iter()
            .zip(labels)
            .filter(|&(_, &l)| l == 1)
            .map(|(&s, _)| s)
            .collect();
        let neg: Vec<f64> = scores
            .iter()
            .zip(labels)
            .filter(|&(_, &l)| l == 0)
            .map(|(&s, _)| s)
            .collect();
        let mut total = 0.0;
        for &p in &pos {
            for &n in &neg {
                total += if p > n {
                    1.0
                } else if p == n {
                    0.5
                } else {
                    0.0
                };
            }
        }
        total / (pos.len() * neg.len()) as f64
    }

    #[test]
    fn four_score_hand_sweep() {
        let scores = [0.1, 0.4, 0.35, 0.8];
        let labels = [0, 0, 1, 1];
        let curve = roc_curve(&scores, &labels).unwrap();
        assert_eq!(
            curve.points,
            vec![(0.0, 0.0), (0.0, 0.5), (0.5, 0.5), (0.5, 1.0), (1.0, 1.0)]
        );
        assert_eq!(curve.thresholds, vec![f64::INFINITY, 0.8, 0.4, 0.35, 0.1]);
        assert!((curve.auc() - 0.75).abs() < 1e-15);
        assert!((auc(&scores, &labels).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn all_tied_scores_collapse_to_the_diagonal() {
        let scores = [2.5; 6];
        let labels = [1, 0, 1, 0, 0, 1];
        let curve = roc_curve(&scores, &labels).unwrap();
        assert_eq!(curve.points, vec![(0.0, 0.0), (1.0, 1.0)]);
        assert_eq!(curve.thresholds, vec![f64::INFINITY, 2.5]);
        assert_eq!(curve.auc(), 0.5);
    }

    #[test]
    fn perfect_separation_passes_through_the_corner() {
        let scores = [3.0, 2.0, -1.0, -2.0];
        let labels = [1, 1, 0, 0];
        let curve = roc_curve(&scores, &labels).unwrap();
        assert!(curve.points.contains(&(0.0, 1.0)));
        assert_eq!(curve.auc(), 1.0);
    }

    #[test]
    fn curve_endpoints_are_exact() {
        let scores = [0.3, 0.1, 0.9, 0.2, 0.5];
        let labels = [0, 1, 1, 0, 1];
        let curve = roc_curve(&scores, &labels).unwrap();
        assert_eq!(curve.points.first(), Some(&(0.0, 0.0)));
        assert_eq!(curve.points.last(), Some(&(1.0, 1.0)));
        assert_eq!(curve.thresholds[0], f64::INFINITY);
    }

    #[test]
    fn accuracy_matches_direct_counts() {
        assert_eq!(accuracy(&[0.6, 0.4], &[1, 0], 0.5).unwrap(), 1.0);
        assert_eq!(accuracy(&[0.6, 0.4], &[0, 1], 0.5).unwrap(), 0.0);
        let scores = [1.0, 1.0, -1.0, -1.0, -1.0];
        let labels = [1, 0, 0, 0, 0];
        assert_eq!(accuracy(&scores, &labels, 0.0).unwrap(), 0.8);
    }

    #[test]
    fn score_exactly_at_threshold_counts_positive() {
        assert_eq!(accuracy(&[0.5], &[1], 0.5).unwrap(), 1.0);
        assert_eq!(accuracy(&[0.5], &[0], 0.5).unwrap(), 0.0);
    }

    #[test]
    fn single_class_is_rejected() {
        assert!(matches!(
            roc_curve(&[0.1, 0.2], &[1, 1]),
            Err(Error::SingleClass)
        ));
        assert!(matches!(
            auc(&[0.1, 0.2], &[0, 0]),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn empty_and_mismatched_inputs_are_rejected() {
        assert!(matches!(roc_curve(&[], &[]), Err(Error::EmptyInput)));
        assert!(matches!(accuracy(&[], &[], 0.0), Err(Error::EmptyInput)));
        assert!(matches!(
            roc_curve(&[0.1], &[0, 1]),
            Err(Error::DimensionMismatch {
                expected: 1,
                actual: 2
            })
        ));
    }

    #[test]
    fn bad_labels_and_non_finite_scores_are_rejected() {
        assert!(matches!(
            roc_curve(&[0.1, 0.2], &[0, 2]),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            roc_curve(&[f64::NAN, 0.2], &[0, 1]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn trapezoid_equals_mann_whitney_on_tie_heavy_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..300 {
            let n = rng.gen_range(2..=60);
            let mut scores = Vec::with_capacity(n);
            let mut labels = Vec::with_capacity(n);
            for _ in 0..n {
                // A coarse grid forces plenty of exact ties.
                scores.push(rng.gen_range(-8..=8) as f64 / 4.0);
                labels.push(u8::from(rng.gen_bool(0.4)));
            }
            labels[0] = 1;
            labels[n - 1] = 0;
            let got = auc(&scores, &labels).unwrap();
            let want = mann_whitney(&scores, &labels);
            assert!(
                (got - want).abs() <= 1e-12,
                "trapezoid {got} vs pair statistic {want}"
            );
        }
    }

    #[test]
    fn roc_csv_round_trips_with_inf_threshold() {
        let scores = [0.1, 0.4, 0.35, 0.8];
        let labels = [0, 0, 1, 1];
        let curve = roc_curve(&scores, &labels).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("roc_svm.csv");
        write_roc_csv(&path, &curve).unwrap();

        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("threshold,fpr,tpr"));
        assert_eq!(lines.next(), Some("inf,0.0,0.0"));
        assert_eq!(text.lines().count(), curve.points.len() + 1);

        assert_eq!(read_roc_csv(&path).unwrap(), curve);
    }

    #[test]
    fn roc_csv_rejects_foreign_headers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "fpr,tpr\n0,0\n").unwrap();
        let err = read_roc_csv(&path).unwrap_err().to_string();
        assert!(err.contains("header"), "{err}");
    }

    #[test]
    fn seed_summary_round_trips_and_is_byte_stable() {
        let mut reports = BTreeMap::new();
        for (model, auc) in [("svm", 0.91), ("qda", 0.874), ("adaboost", 0.9)] {
            reports.insert(
                model.to_string(),
                EvalReport {
                    model_type: model.to_string(),
                    auc,
                    accuracy: 0.85,
                    n_pos: 120,
                    n_neg: 480,
                    seed: 7,
                    config_digest: "abc123".into(),
                },
            );
        }
        let summary = SeedSummary {
            seed: 7,
            config_digest: "abc123".into(),
            reports,
        };
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("summary_a.json");
        let b = dir.path().join("summary_b.json");
        summary.save(&a).unwrap();
        summary.save(&b).unwrap();
        assert_eq!(SeedSummary::load(&a).unwrap(), summary);
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        let text = std::fs::read_to_string(&a).unwrap();
        let keys: Vec<usize> = ["adaboost", "qda", "svm"]
            .iter()
            .map(|k| text.find(&format!("\"{k}\"")).unwrap())
            .collect();
        assert!(keys[0] < keys[1] && keys[1] < keys[2], "reports must be key-sorted");
    }

    /// Dyadic-grid scores with both classes forced present, so affine
    /// transforms below stay exact and tie structure is preserved.
    fn scored_dataset() -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
        (2usize..40).prop_flat_map(|n| {
            (
                proptest::collection::vec((-64i32..=64).prop_map(|k| k as f64 / 8.0), n),
                proptest::collection::vec(0u8..=1, n - 2),
            )
                .prop_map(|(scores, mut labels)| {
                    labels.push(0);
                    labels.push(1);
                    (scores, labels)
                })
        })
    }

    proptest! {
        #[test]
        fn auc_equals_pair_statistic((scores, labels) in scored_dataset()) {
            let got = auc(&scores, &labels).unwrap();
            let want = mann_whitney(&scores, &labels);
            prop_assert!((got - want).abs() <= 1e-12);
            prop_assert!((0.0..=1.0).contains(&got));
        }

        #[test]
        fn positive_affine_rescaling_changes_nothing(
            (scores, labels) in scored_dataset(),
            scale in 1u32..5,
            shift in -4i32..=4,
        ) {
            let mapped: Vec<f64> = scores
                .iter()
                .map(|&s| s * scale as f64 + shift as f64)
                .collect();
            let base = roc_curve(&scores, &labels).unwrap();
            let moved = roc_curve(&mapped, &labels).unwrap();
            prop_assert_eq!(&base.points, &moved.points);
            prop_assert_eq!(base.auc(), moved.auc());
        }

        #[test]
        fn complementing_labels_reflects_auc((scores, labels) in scored_dataset()) {
            let flipped: Vec<u8> = labels.iter().map(|&l| 1 - l).collect();
            let a = auc(&scores, &labels).unwrap();
            let b = auc(&scores, &flipped).unwrap();
            prop_assert!((a + b - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn curve_is_monotone_with_exact_endpoints((scores, labels) in scored_dataset()) {
            let curve = roc_curve(&scores, &labels).unwrap();
            prop_assert_eq!(curve.points[0], (0.0, 0.0));
            prop_assert_eq!(*curve.points.last().unwrap(), (1.0, 1.0));
            for w in curve.points.windows(2) {
                prop_assert!(w[1].0 >= w[0].0);
                prop_assert!(w[1].1 >= w[0].1);
            }
            prop_assert_eq!(curve.points.len(), curve.thresholds.len());
        }

        #[test]
        fn accuracy_at_bottom_threshold_is_prevalence((scores, labels) in scored_dataset()) {
            let prevalence =
                labels.iter().filter(|&&l| l == 1).count() as f64 / labels.len() as f64;
            let got = accuracy(&scores, &labels, f64::NEG_INFINITY).unwrap();
            prop_assert_eq!(got, prevalence);
        }
    }
}
