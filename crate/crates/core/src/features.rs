//! The signed random feature map.
//!
//! With `omega_i ~ mu_plus / ||mu_plus||` and `nu_i ~ mu_minus / ||mu_minus||`,
//!
//! ```text
//! k(x - x') ~ (c1 ||mu_plus|| / s) sum_i cos(omega_i . (x - x'))
//!           - (c2 ||mu_minus|| / s) sum_i cos(nu_i . (x - x'))
//! ```
//!
//! which is the plus-block inner product minus the minus-block inner product of
//! `sqrt(scale / s) [cos(w . x), sin(w . x)]` features.

use crate::kernels::KernelSpec;
use crate::linalg::{dot, norm, Matrix};
use crate::math;
use crate::radial::DecomposedMeasure;
use crate::sampling::{sample_measure, FrequencySample, RngStream, SampleTag, SamplingScheme};
use crate::{Error, Result};
use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMapModel {
    pub omega: FrequencySample,
    /// Empty (zero rows) when the minus component has no mass.
    pub nu: FrequencySample,
    pub scale_plus: f64,
    pub scale_minus: f64,
    pub s: usize,
}

impl FeatureMapModel {
    /// Assemble a model from pre-drawn frequencies. `nu` must be empty iff
    /// `scale_minus == 0`.
    pub fn from_parts(omega: FrequencySample, nu: FrequencySample, scale_plus: f64, scale_minus: f64) -> Result<Self> {
        let s = omega.len();
        if !(scale_plus >= 0.0 && scale_minus >= 0.0 && scale_plus.is_finite() && scale_minus.is_finite()) {
            return Err(Error::Domain("feature scales must be finite and nonnegative".into()));
        }
        if (scale_minus == 0.0) != nu.is_empty() {
            return Err(Error::ShapeMismatch("minus frequencies must be present exactly when scale_minus > 0".into()));
        }
        if !nu.is_empty() && (nu.len() != s || nu.dim() != omega.dim()) {
            return Err(Error::ShapeMismatch("plus and minus samples differ in shape".into()));
        }
        if omega.weights.len() != s || nu.weights.len() != nu.len() {
            return Err(Error::ShapeMismatch("one weight per frequency is required".into()));
        }
        Ok(Self { omega, nu, scale_plus, scale_minus, s })
    }

    pub fn input_dim(&self) -> usize {
        self.omega.dim()
    }

    /// `4s`: cosine and sine per frequency in each of the two blocks.
    pub fn feature_dim(&self) -> usize {
        4 * self.s
    }

    pub fn is_positive_definite(&self) -> bool {
        self.nu.is_empty()
    }

    /// `k~(x, x)`, the same for every `x`.
    pub fn self_similarity(&self) -> f64 {
        let mean = |w: &[f64]| if w.is_empty() { 0.0 } else { w.iter().sum::<f64>() / self.s as f64 };
        self.scale_plus * mean(&self.omega.weights) - self.scale_minus * mean(&self.nu.weights)
    }
}

/// Draw `s` frequencies from each normalized component. The plus side uses the
/// substream `derive("omega", 0)` of `rng`, the minus side `derive("nu", 0)`.
pub fn build_feature_map(
    decomposed: &DecomposedMeasure,
    s: usize,
    scheme: SamplingScheme,
    rng: &RngStream,
) -> Result<FeatureMapModel> {
    if s == 0 {
        return Err(Error::Domain("number of random features must be >= 1".into()));
    }
    let (scale_plus, scale_minus) = decomposed.block_scales();
    if scale_plus == 0.0 && scale_minus == 0.0 {
        return Err(Error::EmptyPlus);
    }
    let d = decomposed.ambient_dim();
    let draw = |mu, purpose| -> Result<FrequencySample> { sample_measure(mu, s, scheme, &mut rng.derive(purpose, 0).rng()) };
    let empty = || FrequencySample { vectors: Matrix::zeros(0, d), weights: Vec::new(), tag: SampleTag::Mc };
    let omega = if scale_plus > 0.0 { draw(&decomposed.mu_plus, "omega")? } else { zero_side(d, s) };
    let (nu, scale_minus) = if decomposed.is_positive_definite() || scale_minus == 0.0 {
        (empty(), 0.0)
    } else {
        (draw(&decomposed.mu_minus, "nu")?, scale_minus)
    };
    FeatureMapModel::from_parts(omega, nu, scale_plus, scale_minus)
}

/// Placeholder plus side for a purely negative measure: all-zero frequencies
/// with zero scale contribute nothing.
fn zero_side(d: usize, s: usize) -> FrequencySample {
    FrequencySample { vectors: Matrix::zeros(s, d), weights: vec![1.0; s], tag: SampleTag::Mc }
}

/// Real feature blocks; the kernel estimate is `<P_i, P_j> - <M_i, M_j>`.
#[derive(Debug, Clone, PartialEq)]
pub struct MappedFeatures {
    pub plus_block: Matrix,
    /// `n x 0` for positive definite models.
    pub minus_block: Matrix,
}

impl MappedFeatures {
    pub fn rows(&self) -> usize {
        self.plus_block.rows()
    }

    /// `[plus_block, minus_block]` as one matrix, for linear models.
    pub fn concatenated(&self) -> Matrix {
        let n = self.rows();
        let (a, b) = (self.plus_block.cols(), self.minus_block.cols());
        let mut out = Matrix::zeros(n, a + b);
        for i in 0..n {
            let row = out.row_mut(i);
            row[..a].copy_from_slice(self.plus_block.row(i));
            row[a..].copy_from_slice(self.minus_block.row(i));
        }
        out
    }
}

fn map_block(freqs: &FrequencySample, scale: f64, s: usize, points: &Matrix) -> Matrix {
    let n = points.rows();
    let m = freqs.len();
    let mut out = Matrix::zeros(n, 2 * m);
    let amp: Vec<f64> = freqs.weights.iter().map(|w| math::sqrt(scale * w / s as f64)).collect();
    for i in 0..n {
        let x = points.row(i);
        let row = out.row_mut(i);
        for (k, w) in freqs.vectors.row_iter().enumerate() {
            let t = dot(w, x);
            row[2 * k] = amp[k] * math::cos(t);
            row[2 * k + 1] = amp[k] * math::sin(t);
        }
    }
    out
}

pub fn map_points(model: &FeatureMapModel, points: &Matrix) -> Result<MappedFeatures> {
    if points.cols() != model.input_dim() {
        return Err(Error::DimensionMismatch { expected: model.input_dim(), got: points.cols() });
    }
    Ok(MappedFeatures {
        plus_block: map_block(&model.omega, model.scale_plus, model.s, points),
        minus_block: map_block(&model.nu, model.scale_minus, model.s, points),
    })
}

fn check_pair(model: &FeatureMapModel, x: &[f64], y: &[f64]) -> Result<()> {
    for v in [x, y] {
        if v.len() != model.input_dim() {
            return Err(Error::DimensionMismatch { expected: model.input_dim(), got: v.len() });
        }
    }
    Ok(())
}

/// `<Phi_plus(x), Phi_plus(x')> - <Phi_minus(x), Phi_minus(x')>`.
pub fn approx_kernel(model: &FeatureMapModel, x: &[f64], x_prime: &[f64]) -> Result<f64> {
    check_pair(model, x, x_prime)?;
    let pts = Matrix::from_vec(2, x.len(), [x, x_prime].concat())?;
    let f = map_points(model, &pts)?;
    Ok(dot(f.plus_block.row(0), f.plus_block.row(1)) - dot(f.minus_block.row(0), f.minus_block.row(1)))
}

/// The same estimate through `cos(a) cos(b) + sin(a) sin(b) = cos(a - b)`.
pub fn approx_kernel_cosine(model: &FeatureMapModel, x: &[f64], x_prime: &[f64]) -> Result<f64> {
    check_pair(model, x, x_prime)?;
    let z: Vec<f64> = x.iter().zip(x_prime).map(|(a, b)| a - b).collect();
    let side = |f: &FrequencySample, scale: f64| {
        let sum: f64 = f.vectors.row_iter().zip(&f.weights).map(|(w, wt)| wt * math::cos(dot(w, &z))).sum();
        scale * sum / model.s as f64
    };
    Ok(side(&model.omega, model.scale_plus) - side(&model.nu, model.scale_minus))
}

/// `P P^T - M M^T`.
pub fn approx_gram(model: &FeatureMapModel, points: &Matrix) -> Result<Matrix> {
    Ok(gram_from_features(&map_points(model, points)?))
}

pub fn gram_from_features(f: &MappedFeatures) -> Matrix {
    let n = f.rows();
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = dot(f.plus_block.row(i), f.plus_block.row(j)) - dot(f.minus_block.row(i), f.minus_block.row(j));
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairStats {
    pub exact: f64,
    pub mean: f64,
    pub bias: f64,
    /// Standard error of `mean`.
    pub std_error: f64,
    pub mse: f64,
    pub mse_std_error: f64,
}

impl PairStats {
    /// `|bias| <= z * std_error`.
    pub fn within(&self, z: f64) -> bool {
        self.bias.abs() <= z * self.std_error
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorStats {
    pub per_pair: Vec<PairStats>,
    pub trials: usize,
    /// MSE averaged over pairs.
    pub mse: f64,
    pub mse_std_error: f64,
    pub mean_abs_bias: f64,
}

/// Bias and MSE of `k~` against the exact kernel over `trials` rebuilds. Trial
/// `t` builds its model from `rng.derive("trial", t)`.
pub fn estimator_mse<F>(
    spec: &KernelSpec,
    mut factory: F,
    pairs: &[(Vec<f64>, Vec<f64>)],
    trials: usize,
    rng: &RngStream,
) -> Result<EstimatorStats>
where
    F: FnMut(&RngStream) -> Result<FeatureMapModel>,
{
    if pairs.is_empty() || trials < 2 {
        return Err(Error::Domain("estimator statistics need pairs and at least two trials".into()));
    }
    let exact: Vec<f64> = pairs
        .iter()
        .map(|(x, y)| spec.eval(norm(&x.iter().zip(y).map(|(a, b)| a - b).collect::<Vec<_>>())))
        .collect();
    let mut est = vec![Vec::with_capacity(trials); pairs.len()];
    for t in 0..trials {
        let model = factory(&rng.derive("trial", t as u64))?;
        for (p, (x, y)) in pairs.iter().enumerate() {
            est[p].push(approx_kernel_cosine(&model, x, y)?);
        }
    }
    let n = trials as f64;
    let per_pair: Vec<PairStats> = est
        .iter()
        .zip(&exact)
        .map(|(v, &k)| {
            let mean = v.iter().sum::<f64>() / n;
            let var = v.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (n - 1.0);
            let sq: Vec<f64> = v.iter().map(|e| (e - k) * (e - k)).collect();
            let mse = sq.iter().sum::<f64>() / n;
            let mse_var = sq.iter().map(|e| (e - mse) * (e - mse)).sum::<f64>() / (n - 1.0);
            PairStats {
                exact: k,
                mean,
                bias: mean - k,
                std_error: math::sqrt(var / n),
                mse,
                mse_std_error: math::sqrt(mse_var / n),
            }
        })
        .collect();
    let m = per_pair.len() as f64;
    let mse = per_pair.iter().map(|p| p.mse).sum::<f64>() / m;
    let mse_std_error = math::sqrt(per_pair.iter().map(|p| p.mse_std_error * p.mse_std_error).sum::<f64>()) / m;
    let mean_abs_bias = per_pair.iter().map(|p| p.bias.abs()).sum::<f64>() / m;
    Ok(EstimatorStats { per_pair, trials, mse, mse_std_error, mean_abs_bias })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{decompose, SpectrumSpec};

    fn model(kernel: KernelSpec, s: usize, seed: u64) -> FeatureMapModel {
        let split = decompose(&SpectrumSpec::new(kernel)).unwrap();
        build_feature_map(&split, s, SamplingScheme::Mc, &RngStream::new(seed, 0)).unwrap()
    }

    #[test]
    fn gaussian_model_is_positive_definite() {
        let m = model(KernelSpec::gaussian(1.0, 3).unwrap(), 16, 1);
        assert!(m.is_positive_definite());
        assert_eq!(m.scale_plus, 1.0);
        assert_eq!(m.feature_dim(), 64);
        let f = map_points(&m, &Matrix::zeros(1, 3)).unwrap();
        assert_eq!(f.minus_block.cols(), 0);
        for (k, v) in f.plus_block.row(0).iter().enumerate() {
            let expect = if k % 2 == 0 { math::sqrt(1.0 / 16.0) } else { 0.0 };
            assert!((v - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn delta_gaussian_self_similarity_is_zero() {
        let m = model(KernelSpec::delta_gaussian(1.0, 10.0, 4).unwrap(), 32, 2);
        assert_eq!((m.scale_plus, m.scale_minus), (1.0, 1.0));
        let x = [0.3, -1.0, 2.0, 0.5];
        assert!(approx_kernel(&m, &x, &x).unwrap().abs() < 1e-14);
        assert_eq!(approx_kernel_cosine(&m, &x, &x).unwrap(), 0.0);
    }

    #[test]
    fn routes_agree_and_shift_invariance_holds() {
        let m = model(KernelSpec::delta_gaussian(1.0, 3.0, 5).unwrap(), 20, 3);
        let mut r = RngStream::new(9, 9).rng();
        let pts = crate::sampling::sample_gaussian(1.0, 5, 6, &mut r).unwrap();
        for i in 0..3 {
            let (x, y, c) = (pts.row(i), pts.row(i + 3), pts.row((i + 1) % 6));
            let a = approx_kernel(&m, x, y).unwrap();
            let b = approx_kernel_cosine(&m, x, y).unwrap();
            assert!((a - b).abs() < 1e-10);
            let xs: Vec<f64> = x.iter().zip(c).map(|(p, q)| p + q).collect();
            let ys: Vec<f64> = y.iter().zip(c).map(|(p, q)| p + q).collect();
            assert!((approx_kernel(&m, &xs, &ys).unwrap() - a).abs() < 1e-10);
        }
        let g = approx_gram(&m, &pts).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert!((g[(i, j)] - approx_kernel(&m, pts.row(i), pts.row(j)).unwrap()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn single_point_gram_is_the_signature() {
        let m = model(KernelSpec::delta_gaussian(1.0, 10.0, 2).unwrap(), 8, 4);
        let g = approx_gram(&m, &Matrix::from_rows(&[vec![0.2, 0.1]]).unwrap()).unwrap();
        assert!((g[(0, 0)] - (m.scale_plus - m.scale_minus)).abs() < 1e-14);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let m = model(KernelSpec::gaussian(1.0, 3).unwrap(), 4, 5);
        assert!(matches!(approx_kernel(&m, &[0.0; 2], &[0.0; 2]), Err(Error::DimensionMismatch { .. })));
        assert!(map_points(&m, &Matrix::zeros(1, 4)).is_err());
    }

    #[test]
    fn zero_kernel_split_is_rejected() {
        let zero = crate::radial::RadialSignedMeasure::new(crate::radial::RadialDensity::Zero, 2, 1.0).unwrap();
        let split = DecomposedMeasure::from_components(zero.clone(), zero, 1.0, 1.0).unwrap();
        assert!(matches!(
            build_feature_map(&split, 4, SamplingScheme::Mc, &RngStream::new(0, 0)),
            Err(Error::EmptyPlus)
        ));
    }

    #[test]
    fn large_s_gaussian_is_unbiased() {
        let spec = KernelSpec::gaussian(1.0, 3).unwrap();
        let split = decompose(&SpectrumSpec::new(spec)).unwrap();
        let pairs = vec![(vec![0.0, 0.0, 0.0], vec![0.5, 0.5, 0.0]), (vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0])];
        let stats = estimator_mse(
            &spec,
            |r| build_feature_map(&split, 2048, SamplingScheme::Mc, r),
            &pairs,
            20,
            &RngStream::new(1, 1),
        )
        .unwrap();
        for p in &stats.per_pair {
            assert!(p.within(3.0), "{p:?}");
        }
    }
}
