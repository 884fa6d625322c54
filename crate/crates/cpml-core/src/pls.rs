//! PLS1 regression used as supervised dimensionality reduction: fit k
//! components against the label vector, then project feature matrices onto
//! the component scores.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A fitted PLS1 reduction. Weight vectors have unit Euclidean norm; scores
/// are produced by sequential projection/deflation with the stored loadings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlsModel {
    pub n_components: usize,
    pub x_means: Vec<f64>,
    pub y_mean: f64,
    pub weights: Vec<Vec<f64>>,
    pub x_loadings: Vec<Vec<f64>>,
    pub y_loadings: Vec<f64>,
}

/// Floor under ‖Xᵀy‖ below which no further component is extractable.
const WEIGHT_NORM_FLOOR: f64 = 1e-12;

fn deflate(x: &mut Array2<f64>, t: &Array1<f64>, p: &Array1<f64>) {
    for (mut row, &ti) in x.rows_mut().into_iter().zip(t.iter()) {
        row.scaled_add(-ti, p);
    }
}

/// Fits `k` PLS1 components on (X, y) and returns the model together with
/// the training score matrix (n × k).
///
/// Per component the weight is closed-form: w ∝ Xᵀy on the current
/// residuals, t = Xw, loadings p = Xᵀt/tᵀt and q = yᵀt/tᵀt, then X and y
/// are deflated by the rank-one fits. No inner iteration is required for a
/// single response.
pub fn fit_pls(x: &Array2<f64>, y: &[f64], k: usize) -> Result<(PlsModel, Array2<f64>)> {
    let n = x.nrows();
    let p_dim = x.ncols();
    if n != y.len() {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: y.len(),
        });
    }
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if k == 0 {
        return Err(Error::Config("n_components must be at least 1".into()));
    }
    let max_k = (n - 1).min(p_dim);
    if k > max_k {
        return Err(Error::ComponentBound {
            requested: k,
            max: max_k,
        });
    }
    let y_max = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let y_min = y.iter().cloned().fold(f64::INFINITY, f64::min);
    if y_max == y_min {
        return Err(Error::ConstantResponse);
    }

    let x_means: Array1<f64> = x.mean_axis(ndarray::Axis(0)).expect("n > 0");
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let mut xc = x - &x_means;
    let mut yc = Array1::from_iter(y.iter().map(|&v| v - y_mean));

    let mut weights = Vec::with_capacity(k);
    let mut x_loadings = Vec::with_capacity(k);
    let mut y_loadings = Vec::with_capacity(k);
    let mut scores = Array2::zeros((n, k));

    for comp in 0..k {
        let v = xc.t().dot(&yc);
        let norm = v.dot(&v).sqrt();
        if norm < WEIGHT_NORM_FLOOR {
            return Err(Error::RankExhausted {
                achieved: comp,
                requested: k,
            });
        }
        let w = &v / norm;
        let t = xc.dot(&w);
        let tt = t.dot(&t);
        let p = xc.t().dot(&t) / tt;
        let q = yc.dot(&t) / tt;

        scores.column_mut(comp).assign(&t);
        deflate(&mut xc, &t, &p);
        yc.scaled_add(-q, &t);

        weights.push(w.to_vec());
        x_loadings.push(p.to_vec());
        y_loadings.push(q);
    }

    Ok((
        PlsModel {
            n_components: k,
            x_means: x_means.to_vec(),
            y_mean,
            weights,
            x_loadings,
            y_loadings,
        },
        scores,
    ))
}

/// Projects rows onto the fitted components: center by the training means,
/// then re-apply each component's weight and deflation in order. On the
/// training matrix this reproduces the fit-time scores exactly.
pub fn transform(model: &PlsModel, x: &Array2<f64>) -> Result<Array2<f64>> {
    let p_dim = model.x_means.len();
    if x.ncols() != p_dim {
        return Err(Error::DimensionMismatch {
            expected: p_dim,
            actual: x.ncols(),
        });
    }
    let means = Array1::from(model.x_means.clone());
    let mut xr = x - &means;
    let mut scores = Array2::zeros((x.nrows(), model.n_components));
    for comp in 0..model.n_components {
        let w = Array1::from(model.weights[comp].clone());
        let p = Array1::from(model.x_loadings[comp].clone());
        let t = xr.dot(&w);
        scores.column_mut(comp).assign(&t);
        deflate(&mut xr, &t, &p);
    }
    Ok(scores)
}

impl PlsModel {
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer_pretty(file, self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<PlsModel> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        Ok(serde_json::from_reader(file)?)
    }
}
