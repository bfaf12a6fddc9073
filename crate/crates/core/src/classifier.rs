//! Linear hinge-loss classifier trained by stochastic subgradient descent.
//!
//! Minimizes `||w||^2 / 2 + C sum_i max(0, 1 - y_i (w . x_i + b))` with the
//! Pegasos step size `1 / (lambda t)`, `lambda = 1 / (C n)`; the intercept is an
//! extra constant feature. The returned weights average the second half of the
//! iterates.

use crate::data::shuffled_indices;
use crate::linalg::{dot, Matrix};
use crate::math;
use crate::sampling::RngStream;
use crate::{Error, Result};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

/// Regularization grid searched by cross-validation.
pub const C_GRID: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];
pub const CV_FOLDS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub c: f64,
}

impl LinearModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.intercept
    }

    pub fn predict(&self, x: &[f64]) -> i32 {
        if self.decision(x) >= 0.0 {
            1
        } else {
            -1
        }
    }

    /// Fraction of rows whose prediction equals the label.
    pub fn accuracy(&self, features: &Matrix, labels: &[i32]) -> f64 {
        if labels.is_empty() {
            return 0.0;
        }
        let hits = features.row_iter().zip(labels).filter(|(x, &y)| self.predict(x) == y).count();
        hits as f64 / labels.len() as f64
    }
}

fn check_labels(features: &Matrix, labels: &[i32]) -> Result<()> {
    if features.rows() != labels.len() {
        return Err(Error::ShapeMismatch(format!("{} rows but {} labels", features.rows(), labels.len())));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y != 1 && y != -1) {
        return Err(Error::NonBinaryLabels(bad));
    }
    if labels.is_empty() {
        return Err(Error::Domain("cannot train on an empty dataset".into()));
    }
    if features.as_slice().iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("features must be finite".into()));
    }
    Ok(())
}

pub fn train_linear_classifier(
    features: &Matrix,
    labels: &[i32],
    c: f64,
    epochs: usize,
    rng: &RngStream,
) -> Result<LinearModel> {
    check_labels(features, labels)?;
    if !(c.is_finite() && c > 0.0) || epochs == 0 {
        return Err(Error::Domain(format!("need C > 0 and epochs >= 1, got C={c}, epochs={epochs}")));
    }
    let n = labels.len();
    let dim = features.cols();
    let lambda = 1.0 / (c * n as f64);
    let radius = 1.0 / math::sqrt(lambda);
    // w[dim] is the intercept
    let mut w = vec![0.0; dim + 1];
    let mut avg = vec![0.0; dim + 1];
    let mut averaged = 0usize;
    let total = epochs * n;
    let mut t = 0usize;
    let mut r = rng.rng();
    for _ in 0..epochs {
        for i in shuffled_indices(n, &mut r) {
            t += 1;
            let x = features.row(i);
            let y = labels[i] as f64;
            let margin = y * (dot(&w[..dim], x) + w[dim]);
            let eta = 1.0 / (lambda * t as f64);
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            if margin < 1.0 {
                for (v, xi) in w[..dim].iter_mut().zip(x) {
                    *v += eta * y * xi;
                }
                w[dim] += eta * y;
            }
            let wn = math::sqrt(dot(&w, &w));
            if wn > radius {
                w.iter_mut().for_each(|v| *v *= radius / wn);
            }
            if 2 * t > total {
                averaged += 1;
                for (a, v) in avg.iter_mut().zip(&w) {
                    *a += v;
                }
            }
        }
    }
    avg.iter_mut().for_each(|a| *a /= averaged as f64);
    let intercept = avg.pop().unwrap_or(0.0);
    Ok(LinearModel { weights: avg, intercept, c })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub best_c: f64,
    /// `(C, mean validation accuracy)` for every grid value.
    pub scores: Vec<(f64, f64)>,
}

/// `folds`-fold cross-validated accuracy for each `C` in `grid`. Ties keep the
/// smaller `C`.
pub fn cross_validate(
    features: &Matrix,
    labels: &[i32],
    grid: &[f64],
    folds: usize,
    epochs: usize,
    rng: &RngStream,
) -> Result<CvResult> {
    check_labels(features, labels)?;
    let n = labels.len();
    if folds < 2 || folds > n || grid.is_empty() {
        return Err(Error::Domain(format!("need 2 <= folds <= n and a nonempty grid (folds={folds}, n={n})")));
    }
    let order = shuffled_indices(n, &mut rng.derive("cv-folds", 0).rng());
    let take = |idx: &[usize]| -> Result<(Matrix, Vec<i32>)> {
        let mut data = Vec::with_capacity(idx.len() * features.cols());
        for &i in idx {
            data.extend_from_slice(features.row(i));
        }
        Ok((Matrix::from_vec(idx.len(), features.cols(), data)?, idx.iter().map(|&i| labels[i]).collect()))
    };
    let mut scores = Vec::with_capacity(grid.len());
    for (gi, &c) in grid.iter().enumerate() {
        let mut acc = 0.0;
        for f in 0..folds {
            let (lo, hi) = (f * n / folds, (f + 1) * n / folds);
            let train: Vec<usize> = order[..lo].iter().chain(&order[hi..]).copied().collect();
            let (xt, yt) = take(&train)?;
            let (xv, yv) = take(&order[lo..hi])?;
            let model = train_linear_classifier(&xt, &yt, c, epochs, &rng.derive("cv-train", (gi * folds + f) as u64))?;
            acc += model.accuracy(&xv, &yv);
        }
        scores.push((c, acc / folds as f64));
    }
    let best_c = scores.iter().fold(scores[0], |best, &s| if s.1 > best.1 { s } else { best }).0;
    Ok(CvResult { best_c, scores })
}

/// Select `C` from [`C_GRID`] by 5-fold cross-validation, then refit on all rows.
pub fn train_with_cv(features: &Matrix, labels: &[i32], epochs: usize, rng: &RngStream) -> Result<(LinearModel, CvResult)> {
    let cv = cross_validate(features, labels, &C_GRID, CV_FOLDS.min(labels.len()), epochs, rng)?;
    let model = train_linear_classifier(features, labels, cv.best_c, epochs, &rng.derive("final", 0))?;
    Ok((model, cv))
}
