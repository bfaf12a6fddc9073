//! Exact closed forms of the stationary kernels, `k(x, x') = k(||x - x'||)`.

use crate::linalg::{dot, norm, Matrix};
use crate::math::{self, PI};
use crate::sampling::RngStream;
use crate::{Error, Result};
use alloc::format;
use rand_distr::{Distribution, StandardNormal};

/// Tolerance on `| ||x|| - 1 |` for inputs of the spherical kernels.
pub const UNIT_NORM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelFamily {
    /// `exp(-z^2 / (2 tau^2))`.
    Gaussian { tau: f64 },
    /// `exp(-z^2 / (2 tau1^2)) - exp(-z^2 / (2 tau2^2))`.
    DeltaGaussian { tau1: f64, tau2: f64 },
    /// `(1 - z^2/a^2)^p` on the unit sphere (`z <= 2`).
    SphericalPolynomial { a: f64, p: u32 },
    /// Zero-order arc-cosine kernel on the unit sphere.
    ArcCosine0,
    /// First-order arc-cosine kernel on the unit sphere.
    ArcCosine1,
    /// Neural tangent kernel of a two-layer ReLU network on the unit sphere.
    NtkTwoLayerRelu,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    input_dim: usize,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, input_dim: usize) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::InvalidKernel("input dimension must be >= 1".into()));
        }
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidKernel(format!("{name} must be finite and > 0, got {v}")))
            }
        };
        match family {
            KernelFamily::Gaussian { tau } => positive("tau", tau)?,
            KernelFamily::DeltaGaussian { tau1, tau2 } => {
                positive("tau1", tau1)?;
                positive("tau2", tau2)?;
                if tau1 == tau2 {
                    return Err(Error::InvalidKernel("delta-Gaussian needs tau1 != tau2".into()));
                }
            }
            KernelFamily::SphericalPolynomial { a, p } => {
                if !(a.is_finite() && a >= 2.0) {
                    return Err(Error::InvalidKernel(format!("spherical polynomial needs a >= 2, got {a}")));
                }
                if p < 1 {
                    return Err(Error::InvalidKernel("spherical polynomial needs p >= 1".into()));
                }
            }
            KernelFamily::ArcCosine0 | KernelFamily::ArcCosine1 | KernelFamily::NtkTwoLayerRelu => {}
        }
        Ok(Self { family, input_dim })
    }

    pub fn gaussian(tau: f64, d: usize) -> Result<Self> {
        Self::new(KernelFamily::Gaussian { tau }, d)
    }

    pub fn delta_gaussian(tau1: f64, tau2: f64, d: usize) -> Result<Self> {
        Self::new(KernelFamily::DeltaGaussian { tau1, tau2 }, d)
    }

    pub fn spherical_polynomial(a: f64, p: u32, d: usize) -> Result<Self> {
        Self::new(KernelFamily::SphericalPolynomial { a, p }, d)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn with_input_dim(self, d: usize) -> Result<Self> {
        Self::new(self.family, d)
    }

    /// Short stable identifier, as used on the command line and in reports.
    pub fn name(&self) -> &'static str {
        match self.family {
            KernelFamily::Gaussian { .. } => "gaussian",
            KernelFamily::DeltaGaussian { .. } => "delta-gaussian",
            KernelFamily::SphericalPolynomial { .. } => "sph-poly",
            KernelFamily::ArcCosine0 => "arccos0",
            KernelFamily::ArcCosine1 => "arccos1",
            KernelFamily::NtkTwoLayerRelu => "ntk",
        }
    }

    /// Families defined on the unit sphere, where `z = ||x - x'|| <= 2`.
    pub fn is_spherical(&self) -> bool {
        !matches!(self.family, KernelFamily::Gaussian { .. } | KernelFamily::DeltaGaussian { .. })
    }

    pub fn eval(&self, z: f64) -> f64 {
        eval_kernel(self, z)
    }

    /// Distance beyond which the kernel is zero (spherical) or negligible.
    pub fn radial_extent(&self) -> f64 {
        let width = |tau: f64| tau * (math::sqrt(2.0 * self.input_dim as f64) + 10.0);
        match self.family {
            KernelFamily::Gaussian { tau } => width(tau),
            KernelFamily::DeltaGaussian { tau1, tau2 } => width(tau1.max(tau2)),
            _ => 2.0,
        }
    }
}

/// Zero-order arc-cosine kernel as a function of the cosine `u`.
pub fn arc_cosine0(u: f64) -> f64 {
    1.0 - math::acos(u.clamp(-1.0, 1.0)) / PI
}

/// First-order arc-cosine kernel as a function of the cosine `u`.
pub fn arc_cosine1(u: f64) -> f64 {
    let u = u.clamp(-1.0, 1.0);
    (u * (PI - math::acos(u)) + math::sqrt((1.0 - u * u).max(0.0))) / PI
}

/// Exact `k(z)` for `z >= 0`. Spherical families vanish for `z > 2`.
pub fn eval_kernel(spec: &KernelSpec, z: f64) -> f64 {
    debug_assert!(z >= 0.0, "kernel distance must be nonnegative");
    let z = math::abs(z);
    let z2 = z * z;
    if spec.is_spherical() && z > 2.0 {
        return 0.0;
    }
    let u = 1.0 - 0.5 * z2;
    match spec.family {
        KernelFamily::Gaussian { tau } => math::exp(-z2 / (2.0 * tau * tau)),
        KernelFamily::DeltaGaussian { tau1, tau2 } => {
            math::exp(-z2 / (2.0 * tau1 * tau1)) - math::exp(-z2 / (2.0 * tau2 * tau2))
        }
        KernelFamily::SphericalPolynomial { a, p } => math::powi(1.0 - z2 / (a * a), p as i32),
        KernelFamily::ArcCosine0 => arc_cosine0(u),
        KernelFamily::ArcCosine1 => arc_cosine1(u),
        KernelFamily::NtkTwoLayerRelu => {
            (2.0 - z2) / PI * math::acos((0.5 * z2 - 1.0).clamp(-1.0, 1.0))
                + z / (2.0 * PI) * math::sqrt((4.0 - z2).max(0.0))
        }
    }
}

/// Fails with `DataNotNormalized` if any row is off the unit sphere.
pub fn check_unit_rows(points: &Matrix) -> Result<()> {
    for (i, row) in points.row_iter().enumerate() {
        let n = norm(row);
        if (n - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::DataNotNormalized { row: i, norm: n });
        }
    }
    Ok(())
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    math::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// Exact Gram matrix `K_ij = k(||x_i - x_j||)` over the rows of `points`.
pub fn gram_matrix(spec: &KernelSpec, points: &Matrix) -> Result<Matrix> {
    if points.rows() > 0 && points.cols() != spec.input_dim() {
        return Err(Error::DimensionMismatch { expected: spec.input_dim(), got: points.cols() });
    }
    if spec.is_spherical() {
        check_unit_rows(points)?;
    }
    let n = points.rows();
    let mut k = Matrix::zeros(n, n);
    let k0 = spec.eval(0.0);
    for i in 0..n {
        k[(i, i)] = k0;
        for j in (i + 1)..n {
            let v = spec.eval(distance(points.row(i), points.row(j)));
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

const ORACLE_BLOCK: usize = 1 << 16;

/// Monte Carlo estimate of the two-layer ReLU NTK
/// `2 E[(w.x)+ (w.x')+] + 2 (x.x') E[1{w.x >= 0} 1{w.x' >= 0}]`, `w ~ N(0, I)`.
///
/// Samples are drawn in blocks of 65536, each from its own substream of
/// `seed`, so the estimate does not depend on how blocks are scheduled.
pub fn ntk_monte_carlo_oracle(x: &[f64], x_prime: &[f64], samples: usize, seed: u64) -> Result<MonteCarloEstimate> {
    if x.len() != x_prime.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: x_prime.len() });
    }
    if samples < 2 {
        return Err(Error::Domain("NTK oracle needs at least two samples".into()));
    }
    for (i, v) in [x, x_prime].iter().enumerate() {
        let n = norm(v);
        if (n - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::DataNotNormalized { row: i, norm: n });
        }
    }
    let cosine = dot(x, x_prime);
    let master = RngStream::new(seed, 0);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut w = alloc::vec![0.0; x.len()];
    let blocks = samples.div_ceil(ORACLE_BLOCK);
    for b in 0..blocks {
        let mut rng = master.derive("ntk-oracle", b as u64).rng();
        let count = ORACLE_BLOCK.min(samples - b * ORACLE_BLOCK);
        for _ in 0..count {
            for wi in w.iter_mut() {
                *wi = StandardNormal.sample(&mut rng);
            }
            let a = dot(&w, x);
            let c = dot(&w, x_prime);
            let mut v = 2.0 * a.max(0.0) * c.max(0.0);
            if a >= 0.0 && c >= 0.0 {
                v += 2.0 * cosine;
            }
            sum += v;
            sum_sq += v * v;
        }
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(MonteCarloEstimate { mean, std_error: math::sqrt(var / n), samples })
}
