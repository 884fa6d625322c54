//! Soft-margin SVM with an RBF kernel, trained by sequential minimal
//! optimization with first-order (maximal-violating-pair) working-set
//! selection.

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A trained SVM. `alphas` carry the label sign folded in (αᵢ·yᵢ) and only
/// nonzero entries are kept, each paired with its support vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub support_vectors: Vec<Vec<f64>>,
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub c: f64,
}

/// Training hyperparameters. `gamma: None` selects the variance-median
/// default; `max_iter: None` allows 10·n pair updates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvmParams {
    pub c: f64,
    pub gamma: Option<f64>,
    pub tol: f64,
    pub max_iter: Option<usize>,
}

impl Default for SvmParams {
    fn default() -> SvmParams {
        SvmParams {
            c: 1.0,
            gamma: None,
            tol: 1e-3,
            max_iter: None,
        }
    }
}

fn rbf(a: ArrayView1<f64>, b: ArrayView1<f64>, gamma: f64) -> f64 {
    let mut d2 = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        let d = x - y;
        d2 += d * d;
    }
    (-gamma * d2).exp()
}

/// Default RBF width: 1 / (dimensionality × median per-feature sample
/// variance), falling back to 1/dimensionality when the variances
/// degenerate to zero.
pub fn default_gamma(x: &Array2<f64>) -> f64 {
    let n = x.nrows();
    let k = x.ncols().max(1) as f64;
    let mut variances: Vec<f64> = x
        .columns()
        .into_iter()
        .map(|col| {
            if n < 2 {
                return 0.0;
            }
            let mean = col.sum() / n as f64;
            col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        })
        .collect();
    variances.sort_by(f64::total_cmp);
    let median = match variances.len() {
        0 => 0.0,
        len if len % 2 == 1 => variances[len / 2],
        len => (variances[len / 2 - 1] + variances[len / 2]) / 2.0,
    };
    if median > 0.0 {
        1.0 / (k * median)
    } else {
        1.0 / k
    }
}

/// Kernel rows computed on demand and kept for the lifetime of a training
/// run; only rows of points entering the working set are materialized.
struct KernelCache<'a> {
    x: &'a Array2<f64>,
    gamma: f64,
    rows: Vec<Option<Vec<f64>>>,
}

impl<'a> KernelCache<'a> {
    fn new(x: &'a Array2<f64>, gamma: f64) -> KernelCache<'a> {
        KernelCache {
            x,
            gamma,
            rows: vec![None; x.nrows()],
        }
    }

    fn ensure(&mut self, i: usize) {
        if self.rows[i].is_none() {
            let xi = self.x.row(i);
            let row = (0..self.x.nrows())
                .map(|j| rbf(xi, self.x.row(j), self.gamma))
                .collect();
            self.rows[i] = Some(row);
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        self.rows[i].as_deref().expect("row materialized")
    }
}

fn validate(x: &Array2<f64>, y: &[f64], params: &SvmParams) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            actual: y.len(),
        });
    }
    if x.nrows() == 0 {
        return Err(Error::EmptyDataset);
    }
    if y.iter().any(|&l| l != 1.0 && l != -1.0) {
        return Err(Error::Config("SVM labels must be +1 or -1".into()));
    }
    let n_pos = y.iter().filter(|&&l| l > 0.0).count();
    if n_pos == 0 || n_pos == y.len() {
        return Err(Error::SingleClass);
    }
    if params.c <= 0.0 || !params.c.is_finite() {
        return Err(Error::Config(format!("C must be positive, got {}", params.c)));
    }
    if params.tol <= 0.0 || !params.tol.is_finite() {
        return Err(Error::Config(format!(
            "tolerance must be positive, got {}",
            params.tol
        )));
    }
    Ok(())
}

/// Solves the soft-margin dual. At termination every training point
/// satisfies its KKT condition within `tol`; the bias is the mean of the
/// margin residuals over free support vectors (midpoint of the violation
/// bounds when none are free).
pub fn train_svm(x: &Array2<f64>, y: &[f64], params: &SvmParams) -> Result<SvmModel> {
    validate(x, y, params)?;
    let n = x.nrows();
    let c = params.c;
    let gamma = params.gamma.unwrap_or_else(|| default_gamma(x));
    if gamma <= 0.0 || !gamma.is_finite() {
        return Err(Error::Config(format!("gamma must be positive, got {gamma}")));
    }
    let max_iter = params.max_iter.unwrap_or(10 * n);

    let mut alpha = vec![0.0f64; n];
    let mut grad = vec![-1.0f64; n];
    let mut cache = KernelCache::new(x, gamma);
    let mut iterations = 0usize;
    let (m_final, big_m_final);

    loop {
        let mut m = f64::NEG_INFINITY;
        let mut big_m = f64::INFINITY;
        let mut i_up = None;
        let mut i_low = None;
        for t in 0..n {
            let g = -y[t] * grad[t];
            let positive = y[t] > 0.0;
            let in_up = (positive && alpha[t] < c) || (!positive && alpha[t] > 0.0);
            let in_low = (positive && alpha[t] > 0.0) || (!positive && alpha[t] < c);
            if in_up && g > m {
                m = g;
                i_up = Some(t);
            }
            if in_low && g < big_m {
                big_m = g;
                i_low = Some(t);
            }
        }
        let (Some(i), Some(j)) = (i_up, i_low) else {
            m_final = m;
            big_m_final = big_m;
            break;
        };
        if m - big_m <= params.tol {
            m_final = m;
            big_m_final = big_m;
            break;
        }
        if iterations >= max_iter {
            return Err(Error::SvmNoConvergence {
                iterations,
                violation: m - big_m,
                tol: params.tol,
            });
        }
        iterations += 1;

        cache.ensure(i);
        cache.ensure(j);
        let ki = cache.row(i);
        let kj = cache.row(j);
        let quad = (ki[i] + kj[j] - 2.0 * ki[j]).max(1e-12);
        let old_i = alpha[i];
        let old_j = alpha[j];
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let di = alpha[i] - old_i;
        let dj = alpha[j] - old_j;
        for t in 0..n {
            grad[t] += y[t] * (y[i] * ki[t] * di + y[j] * kj[t] * dj);
        }
    }

    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    for t in 0..n {
        if alpha[t] > 0.0 && alpha[t] < c {
            free_sum += -y[t] * grad[t];
            free_count += 1;
        }
    }
    let bias = if free_count > 0 {
        free_sum / free_count as f64
    } else if m_final.is_finite() && big_m_final.is_finite() {
        (m_final + big_m_final) / 2.0
    } else {
        0.0
    };

    let mut support_vectors = Vec::new();
    let mut alphas = Vec::new();
    for t in 0..n {
        if alpha[t] > 0.0 {
            support_vectors.push(x.row(t).to_vec());
            alphas.push(alpha[t] * y[t]);
        }
    }
    Ok(SvmModel {
        support_vectors,
        alphas,
        bias,
        gamma,
        c,
    })
}

impl SvmModel {
    /// Decision value Σᵢ αᵢ K(svᵢ, x) + b; the sign classifies, the
    /// magnitude is the margin distance in kernel space.
    pub fn score(&self, x: ArrayView1<f64>) -> Result<f64> {
        if let Some(sv) = self.support_vectors.first() {
            if sv.len() != x.len() {
                return Err(Error::DimensionMismatch {
                    expected: sv.len(),
                    actual: x.len(),
                });
            }
        }
        let mut s = self.bias;
        for (sv, &a) in self.support_vectors.iter().zip(&self.alphas) {
            let mut d2 = 0.0;
            for (u, v) in sv.iter().zip(x.iter()) {
                let d = u - v;
                d2 += d * d;
            }
            s += a * (-self.gamma * d2).exp();
        }
        Ok(s)
    }
}
