//! In-memory datasets and synthetic generators.

use crate::linalg::{norm, Matrix};
use crate::sampling::{sample_sphere_directions, RngStream};
use crate::{Error, Result};
use alloc::format;
use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    rows: Matrix,
    labels: Vec<i32>,
    normalized: bool,
}

impl Dataset {
    pub fn new(rows: Matrix, labels: Vec<i32>) -> Result<Self> {
        if rows.rows() != labels.len() {
            return Err(Error::ShapeMismatch(format!("{} rows but {} labels", rows.rows(), labels.len())));
        }
        Ok(Self { rows, labels, normalized: false })
    }

    pub fn rows(&self) -> &Matrix {
        &self.rows
    }

    pub fn labels(&self) -> &[i32] {
        &self.labels
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.rows.cols()
    }

    /// Rows at `idx`, in that order.
    pub fn subset(&self, idx: &[usize]) -> Self {
        let d = self.dim();
        let mut data = Vec::with_capacity(idx.len() * d);
        for &i in idx {
            data.extend_from_slice(self.rows.row(i));
        }
        Self {
            rows: Matrix::from_vec(idx.len(), d, data).expect("subset shape"),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            normalized: self.normalized,
        }
    }

    /// First `n_train` rows and the rest.
    pub fn split_at(&self, n_train: usize) -> (Self, Self) {
        let n_train = n_train.min(self.len());
        let a: Vec<usize> = (0..n_train).collect();
        let b: Vec<usize> = (n_train..self.len()).collect();
        (self.subset(&a), self.subset(&b))
    }

    pub fn into_parts(self) -> (Matrix, Vec<i32>) {
        (self.rows, self.labels)
    }
}

/// Divide every nonzero row by its Euclidean norm. Returns the dataset and the
/// number of zero rows left untouched.
pub fn l2_normalize(data: &Dataset) -> (Dataset, usize) {
    let mut rows = data.rows.clone();
    let mut zero = 0;
    for i in 0..rows.rows() {
        let n = norm(rows.row(i));
        if n == 0.0 {
            zero += 1;
        } else {
            rows.row_mut(i).iter_mut().for_each(|x| *x /= n);
        }
    }
    if zero > 0 {
        log::warn!("{zero} zero rows left unnormalized");
    }
    (Dataset { rows, labels: data.labels.clone(), normalized: true }, zero)
}

/// Rescale every column affinely onto `[0, 1]`; constant columns become 0.
/// For kernels that do not need unit-norm inputs.
pub fn min_max_scale(data: &Dataset) -> Dataset {
    let (n, d) = data.rows.shape();
    let mut rows = data.rows.clone();
    for c in 0..d {
        let (lo, hi) = (0..n)
            .map(|i| data.rows.row(i)[c])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
        let span = hi - lo;
        for i in 0..n {
            let x = &mut rows.row_mut(i)[c];
            *x = if span > 0.0 { (*x - lo) / span } else { 0.0 };
        }
    }
    Dataset { rows, labels: data.labels.clone(), normalized: false }
}

/// `n` points uniform on the unit sphere of `R^d`, all labelled `+1`.
pub fn uniform_sphere(n: usize, d: usize, rng: &RngStream) -> Dataset {
    let rows = sample_sphere_directions(d, n, &mut rng.rng());
    Dataset { rows, labels: alloc::vec![1; n], normalized: true }
}

/// Two Gaussian blobs with unit covariance whose means are `+/- separation/2`
/// along a random unit direction; labels alternate `+1, -1` in draw order.
pub fn gaussian_blobs(n: usize, d: usize, separation: f64, rng: &RngStream) -> Dataset {
    let mut r = rng.rng();
    let axis = sample_sphere_directions(d, 1, &mut r);
    let mut rows = Matrix::zeros(n, d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let y = if i % 2 == 0 { 1 } else { -1 };
        labels.push(y);
        for (k, x) in rows.row_mut(i).iter_mut().enumerate() {
            let noise: f64 = StandardNormal.sample(&mut r);
            *x = noise + 0.5 * separation * y as f64 * axis.row(0)[k];
        }
    }
    Dataset { rows, labels, normalized: false }
}

/// A random permutation of `0..n`.
pub fn shuffled_indices<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        idx.swap(i, j);
    }
    idx
}
