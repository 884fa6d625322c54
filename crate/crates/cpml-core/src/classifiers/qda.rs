//! Quadratic discriminant analysis with pseudo-inverse class covariances,
//! so rank-deficient inputs (e.g. sparse count features) remain trainable.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::pseudo_inverse_psd;

/// Eigenvalues at or below this fraction of the largest are treated as zero
/// when inverting a class covariance.
const COVARIANCE_EIGENVALUE_CUTOFF: f64 = 1e-10;

/// Gaussian fit of one class: mean, precision (pseudo-inverse covariance),
/// log pseudo-determinant and log prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassGaussian {
    pub mean: Vec<f64>,
    pub precision: Vec<Vec<f64>>,
    pub log_pseudo_det: f64,
    pub log_prior: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QdaModel {
    pub negative: ClassGaussian,
    pub positive: ClassGaussian,
}

fn fit_class(x: &Array2<f64>, rows: &[usize], n_total: usize) -> ClassGaussian {
    let n = rows.len();
    let p = x.ncols();
    let mut class_x = Array2::zeros((n, p));
    for (r, &i) in rows.iter().enumerate() {
        class_x.row_mut(r).assign(&x.row(i));
    }
    let mean: Array1<f64> = class_x.mean_axis(Axis(0)).expect("class non-empty");
    let centered = &class_x - &mean;
    let covariance = centered.t().dot(&centered) / (n - 1) as f64;
    let covariance = (&covariance + &covariance.t()) / 2.0;
    let pinv = pseudo_inverse_psd(&covariance, COVARIANCE_EIGENVALUE_CUTOFF);
    ClassGaussian {
        mean: mean.to_vec(),
        precision: pinv
            .inverse
            .rows()
            .into_iter()
            .map(|r| r.to_vec())
            .collect(),
        log_pseudo_det: pinv.log_pseudo_det,
        log_prior: (n as f64 / n_total as f64).ln(),
    }
}

/// Fits per-class means, sample covariances (divisor n−1) and priors. Each
/// class needs at least two samples.
pub fn train_qda(x: &Array2<f64>, y: &[f64]) -> Result<QdaModel> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            actual: y.len(),
        });
    }
    if y.iter().any(|&l| l != 1.0 && l != -1.0) {
        return Err(Error::Config("QDA labels must be +1 or -1".into()));
    }
    let mut pos_rows = Vec::new();
    let mut neg_rows = Vec::new();
    for (i, &label) in y.iter().enumerate() {
        if label > 0.0 {
            pos_rows.push(i);
        } else {
            neg_rows.push(i);
        }
    }
    for (label, rows) in [(0u8, &neg_rows), (1u8, &pos_rows)] {
        if rows.len() < 2 {
            return Err(Error::ClassTooSmall {
                label,
                count: rows.len(),
            });
        }
    }
    Ok(QdaModel {
        negative: fit_class(x, &neg_rows, y.len()),
        positive: fit_class(x, &pos_rows, y.len()),
    })
}

impl ClassGaussian {
    fn log_likelihood(&self, x: ArrayView1<f64>) -> f64 {
        let p = self.mean.len();
        let mut mahalanobis = 0.0;
        for i in 0..p {
            let di = x[i] - self.mean[i];
            let mut acc = 0.0;
            for j in 0..p {
                acc += self.precision[i][j] * (x[j] - self.mean[j]);
            }
            mahalanobis += di * acc;
        }
        -0.5 * mahalanobis - 0.5 * self.log_pseudo_det + self.log_prior
    }
}

impl QdaModel {
    /// Log-likelihood-ratio discriminant; positive values favor the
    /// positive class.
    pub fn score(&self, x: ArrayView1<f64>) -> Result<f64> {
        if x.len() != self.positive.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.positive.mean.len(),
                actual: x.len(),
            });
        }
        Ok(self.positive.log_likelihood(x) - self.negative.log_likelihood(x))
    }
}
