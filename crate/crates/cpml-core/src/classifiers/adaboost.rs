//! Discrete AdaBoost over depth-1 decision stumps, with per-round
//! diagnostics exposed for the boosting-theorem checks.

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weighted errors are clamped into this range before computing α so that a
/// perfect stump keeps a finite vote.
const ERROR_CLAMP: f64 = 1e-10;

/// A depth-1 decision rule: `polarity` if the feature is at or above the
/// threshold, `-polarity` below it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub polarity: i8,
}

impl Stump {
    fn classify(&self, x: ArrayView1<f64>) -> f64 {
        let side = if x[self.feature] >= self.threshold {
            1.0
        } else {
            -1.0
        };
        side * f64::from(self.polarity)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostRound {
    pub stump: Stump,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostModel {
    pub n_features: usize,
    /// Configured round budget; `rounds` may be shorter after an early stop.
    pub n_rounds: usize,
    pub rounds: Vec<BoostRound>,
}

/// Numeric diagnostics of one boosting round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundTrace {
    /// Weighted error of the selected stump under the weights it was
    /// selected with.
    pub error: f64,
    pub alpha: f64,
    /// Total sample weight after the multiplicative update and
    /// renormalization.
    pub weight_sum: f64,
    /// The same stump's weighted error under the updated weights.
    pub reselected_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoostTrace {
    pub rounds: Vec<RoundTrace>,
}

struct BestStump {
    error: f64,
    stump: Stump,
}

/// Scans all midpoint thresholds of every feature and returns the stump
/// minimizing weighted error; ties resolve to the lowest feature index,
/// then the lowest threshold, then positive polarity.
fn select_stump(
    x: &Array2<f64>,
    y: &[f64],
    weights: &[f64],
    sorted: &[Vec<usize>],
) -> Option<BestStump> {
    let n = x.nrows();
    let mut best: Option<BestStump> = None;
    // Each polarity's error is an exact sum of misclassified weights, so a
    // separating cut scores exactly 0.0 rather than complement rounding dust.
    let mut pos_above = vec![0.0; n + 1];
    let mut neg_above = vec![0.0; n + 1];
    for (feature, order) in sorted.iter().enumerate() {
        for k in (0..n).rev() {
            let i = order[k];
            let (pos, neg) = if y[i] > 0.0 {
                (weights[i], 0.0)
            } else {
                (0.0, weights[i])
            };
            pos_above[k] = pos_above[k + 1] + pos;
            neg_above[k] = neg_above[k + 1] + neg;
        }
        let mut w_pos_below = 0.0;
        let mut w_neg_below = 0.0;
        for k in 0..n - 1 {
            let i = order[k];
            if y[i] > 0.0 {
                w_pos_below += weights[i];
            } else {
                w_neg_below += weights[i];
            }
            let here = x[[i, feature]];
            let next = x[[order[k + 1], feature]];
            if next <= here {
                continue;
            }
            let threshold = (here + next) / 2.0;
            let error_plus = w_pos_below + neg_above[k + 1];
            let error_minus = w_neg_below + pos_above[k + 1];
            for (polarity, error) in [(1i8, error_plus), (-1i8, error_minus)] {
                if best.as_ref().is_none_or(|b| error < b.error) {
                    best = Some(BestStump {
                        error,
                        stump: Stump {
                            feature,
                            threshold,
                            polarity,
                        },
                    });
                }
            }
        }
    }
    best
}

fn weighted_error(x: &Array2<f64>, y: &[f64], weights: &[f64], stump: &Stump) -> f64 {
    (0..x.nrows())
        .filter(|&i| stump.classify(x.row(i)) != y[i])
        .map(|i| weights[i])
        .sum()
}

/// Classic discrete boosting: uniform initial weights, per-round best stump,
/// α = ½ln((1−ε)/ε), multiplicative reweighting with renormalization.
/// Stops early when no stump beats error 0.5; erroring instead if that
/// happens on the first round.
pub fn train_adaboost_traced(
    x: &Array2<f64>,
    y: &[f64],
    n_rounds: usize,
) -> Result<(AdaBoostModel, BoostTrace)> {
    let n = x.nrows();
    if n != y.len() {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: y.len(),
        });
    }
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if y.iter().any(|&l| l != 1.0 && l != -1.0) {
        return Err(Error::Config("boosting labels must be +1 or -1".into()));
    }
    let n_pos = y.iter().filter(|&&l| l > 0.0).count();
    if n_pos == 0 || n_pos == n {
        return Err(Error::SingleClass);
    }
    if n_rounds == 0 {
        return Err(Error::Config("n_rounds must be at least 1".into()));
    }

    let sorted: Vec<Vec<usize>> = (0..x.ncols())
        .map(|f| {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| x[[a, f]].total_cmp(&x[[b, f]]));
            order
        })
        .collect();

    let mut weights = vec![1.0 / n as f64; n];
    let mut rounds = Vec::new();
    let mut trace = Vec::new();
    for round in 0..n_rounds {
        let best = select_stump(x, y, &weights, &sorted);
        let best = match best {
            Some(b) if b.error < 0.5 => b,
            _ if round == 0 => return Err(Error::Unlearnable),
            _ => break,
        };
        let clamped = best.error.clamp(ERROR_CLAMP, 1.0 - ERROR_CLAMP);
        let alpha = 0.5 * ((1.0 - clamped) / clamped).ln();
        for (i, w) in weights.iter_mut().enumerate() {
            *w *= (-alpha * y[i] * best.stump.classify(x.row(i))).exp();
        }
        let z: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= z;
        }
        trace.push(RoundTrace {
            error: best.error,
            alpha,
            weight_sum: weights.iter().sum(),
            reselected_error: weighted_error(x, y, &weights, &best.stump),
        });
        rounds.push(BoostRound {
            stump: best.stump,
            alpha,
        });
    }

    Ok((
        AdaBoostModel {
            n_features: x.ncols(),
            n_rounds,
            rounds,
        },
        BoostTrace { rounds: trace },
    ))
}

pub fn train_adaboost(x: &Array2<f64>, y: &[f64], n_rounds: usize) -> Result<AdaBoostModel> {
    train_adaboost_traced(x, y, n_rounds).map(|(model, _)| model)
}

impl AdaBoostModel {
    /// Weighted vote Σₜ αₜ hₜ(x).
    pub fn score(&self, x: ArrayView1<f64>) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: x.len(),
            });
        }
        Ok(self
            .rounds
            .iter()
            .map(|r| r.alpha * r.stump.classify(x))
            .sum())
    }
}
