//! Frequency samplers for the components of a decomposed spectral measure.
//!
//! A radial measure is sampled as a uniform direction times a radius drawn from
//! `q(r) ~ mu(r) r^(d-1)` on `(0, R]`. Gaussian components are drawn exactly.

use crate::linalg::{norm, orthonormalize_rows, Matrix};
use crate::math;
use crate::quadrature::{integrate_piecewise, QuadratureConfig};
use crate::radial::{compute_mass, RadialDensity, RadialSignedMeasure};
use crate::specfun::surface_area;
use crate::{Error, Result};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Grid size used to locate the maximum of the rejection target.
pub const ENVELOPE_GRID: usize = 10_000;
/// Safety factor on the gridded maximum.
pub const ENVELOPE_FACTOR: f64 = 1.1;
const MAX_ORTHO_ATTEMPTS: u32 = 10;

/// A reproducible random stream: equal `(seed, stream_id)` give equal draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Independent substream for `(purpose, index)`.
    pub fn derive(&self, purpose: &str, index: u64) -> Self {
        let tag = splitmix64(fnv1a(purpose.as_bytes()) ^ splitmix64(index));
        Self { seed: self.seed, stream_id: splitmix64(self.stream_id ^ tag) }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingScheme {
    /// Independent draws.
    Mc,
    /// Orthogonal directions within blocks of `d` rows.
    Omc,
    /// Draws from a Gaussian surrogate, reweighted.
    Importance,
}

/// How a [`FrequencySample`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleTag {
    Mc,
    Omc,
    Importance,
    RejectionMc,
    RejectionOmc,
}

impl SampleTag {
    pub fn name(self) -> &'static str {
        match self {
            Self::Mc => "mc",
            Self::Omc => "omc",
            Self::Importance => "importance",
            Self::RejectionMc => "rejection-mc",
            Self::RejectionOmc => "rejection-omc",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [Self::Mc, Self::Omc, Self::Importance, Self::RejectionMc, Self::RejectionOmc].into_iter().find(|t| t.name() == name)
    }
}

/// `s` frequencies (rows) with per-row weights; unweighted schemes carry all ones.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySample {
    pub vectors: Matrix,
    pub weights: Vec<f64>,
    pub tag: SampleTag,
}

impl FrequencySample {
    pub fn len(&self) -> usize {
        self.vectors.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }
}

fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// `s` i.i.d. uniform directions on the unit sphere of `R^d`.
pub fn sample_sphere_directions<R: Rng + ?Sized>(d: usize, s: usize, rng: &mut R) -> Matrix {
    let mut m = Matrix::zeros(s, d);
    for i in 0..s {
        let row = m.row_mut(i);
        loop {
            for x in row.iter_mut() {
                *x = standard_normal(rng);
            }
            let n = norm(row);
            if n > 1e-300 {
                row.iter_mut().for_each(|x| *x /= n);
                break;
            }
        }
    }
    m
}

/// Rows drawn from `N(0, tau^-2 I_d)`.
pub fn sample_gaussian<R: Rng + ?Sized>(tau: f64, d: usize, s: usize, rng: &mut R) -> Result<Matrix> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::Domain(format!("tau must be finite and > 0, got {tau}")));
    }
    let mut m = Matrix::zeros(s, d);
    for i in 0..s {
        for x in m.row_mut(i) {
            *x = standard_normal(rng) / tau;
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadiusDraws {
    pub radii: Vec<f64>,
    pub proposals: u64,
    /// Final envelope height.
    pub envelope: f64,
    /// Number of times a proposal exceeded the envelope.
    pub breaches: u32,
}

impl RadiusDraws {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            0.0
        } else {
            self.radii.len() as f64 / self.proposals as f64
        }
    }
}

/// Radii from `q(r) ~ mu(r) r^(d-1)` on `(0, R]` by rejection from the uniform
/// proposal. On an envelope breach the height is doubled and sampling restarts.
pub fn sample_radius_rejection<R: Rng + ?Sized>(mu: &RadialSignedMeasure, s: usize, rng: &mut R) -> Result<RadiusDraws> {
    let d = mu.ambient_dim();
    let radius = mu.support_radius();
    let q = |r: f64| mu.density(r) * math::powi(r, d as i32 - 1);
    let mut peak = 0.0f64;
    for i in 1..=ENVELOPE_GRID {
        let v = q(radius * i as f64 / ENVELOPE_GRID as f64);
        if v < 0.0 {
            return Err(Error::Domain(format!("rejection target is negative ({v}); sample a Jordan component")));
        }
        peak = peak.max(v);
    }
    if !(peak > 0.0 && peak.is_finite()) {
        return Err(Error::SamplerExhausted(format!("rejection target has no mass on (0, {radius}]")));
    }
    let mut envelope = ENVELOPE_FACTOR * peak;
    let mut radii = Vec::with_capacity(s);
    let mut proposals = 0u64;
    let mut breaches = 0u32;
    let budget = 1_000_000u64 + 100_000 * s as u64;
    while radii.len() < s {
        if proposals >= budget {
            return Err(Error::SamplerExhausted(format!("{proposals} proposals for {} of {s} radii", radii.len())));
        }
        proposals += 1;
        let r = radius * (1.0 - rng.random::<f64>());
        let v = q(r);
        if v > envelope {
            breaches += 1;
            log::warn!("rejection envelope {envelope:e} breached by q({r}) = {v:e}; doubling and restarting");
            envelope *= 2.0;
            radii.clear();
            continue;
        }
        if rng.random::<f64>() * envelope < v {
            radii.push(r);
        }
    }
    Ok(RadiusDraws { radii, proposals, envelope, breaches })
}

/// Replace the directions of each block of `d` rows by an orthonormal frame
/// (Gram-Schmidt on a fresh Gaussian matrix), keeping every row's norm.
pub fn orthogonalize_block<R: Rng + ?Sized>(vectors: &Matrix, rng: &mut R) -> Result<Matrix> {
    let (s, d) = vectors.shape();
    let mut out = Matrix::zeros(s, d);
    let mut start = 0;
    while start < s {
        let block = d.min(s - start);
        let frame = random_frame(d, rng)?;
        for k in 0..block {
            let r = norm(vectors.row(start + k));
            for (o, f) in out.row_mut(start + k).iter_mut().zip(frame.row(k)) {
                *o = r * f;
            }
        }
        start += block;
    }
    Ok(out)
}

fn random_frame<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Matrix> {
    for attempt in 1..=MAX_ORTHO_ATTEMPTS {
        let mut g = Matrix::zeros(d, d);
        for i in 0..d {
            for x in g.row_mut(i) {
                *x = standard_normal(rng);
            }
        }
        if orthonormalize_rows(&mut g) > 1e-8 {
            return Ok(g);
        }
        log::warn!("orthogonal frame degenerated (attempt {attempt}); redrawing");
    }
    Err(Error::RankDeficient { attempts: MAX_ORTHO_ATTEMPTS })
}

/// `s` frequencies from a nonnegative radial measure (normalized to a probability law).
pub fn sample_measure<R: Rng + ?Sized>(
    mu: &RadialSignedMeasure,
    s: usize,
    scheme: SamplingScheme,
    rng: &mut R,
) -> Result<FrequencySample> {
    let d = mu.ambient_dim();
    if scheme == SamplingScheme::Importance {
        let surrogate = GaussianSurrogate::moment_matched(mu)?;
        return sample_importance(mu, &surrogate, s, rng);
    }
    let (vectors, tag) = match *mu.density_fn() {
        RadialDensity::Gaussian { precision, weight } if weight > 0.0 => {
            let g = sample_gaussian(math::sqrt(precision), d, s, rng)?;
            match scheme {
                SamplingScheme::Mc => (g, SampleTag::Mc),
                _ => (orthogonalize_block(&g, rng)?, SampleTag::Omc),
            }
        }
        _ => {
            let radii = sample_radius_rejection(mu, s, rng)?.radii;
            let directions = match scheme {
                SamplingScheme::Mc => sample_sphere_directions(d, s, rng),
                _ => orthogonalize_block(&sample_sphere_directions(d, s, rng), rng)?,
            };
            let mut m = directions;
            for (i, r) in radii.iter().enumerate() {
                m.row_mut(i).iter_mut().for_each(|x| *x *= r);
            }
            let tag = if scheme == SamplingScheme::Mc { SampleTag::RejectionMc } else { SampleTag::RejectionOmc };
            (m, tag)
        }
    };
    Ok(FrequencySample { vectors, weights: vec![1.0; s], tag })
}

/// `N(0, tau^-2 I_d)` restricted to the ball of radius `support_radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSurrogate {
    pub tau: f64,
    pub dim: usize,
    pub support_radius: f64,
    /// Probability of the ball under the untruncated law.
    pub ball_mass: f64,
}

impl GaussianSurrogate {
    pub fn new(tau: f64, dim: usize, support_radius: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::Domain(format!("surrogate tau must be finite and > 0, got {tau}")));
        }
        let law = RadialSignedMeasure::new(RadialDensity::Gaussian { precision: tau * tau, weight: 1.0 }, dim, support_radius)?;
        let ball_mass = compute_mass(&law, true)?.value.min(1.0);
        if ball_mass <= 0.0 {
            return Err(Error::ZeroSurrogate { radius: support_radius });
        }
        Ok(Self { tau, dim, support_radius, ball_mass })
    }

    /// Surrogate whose mean squared norm matches that of `target`.
    pub fn moment_matched(target: &RadialSignedMeasure) -> Result<Self> {
        let d = target.ambient_dim();
        let mass = compute_mass(target, false)?.value;
        let s = surface_area(d);
        let f = |r: f64| s * target.density(r).abs() * math::powi(r, d as i32 + 1);
        let second = integrate_piecewise(f, &target.breakpoints(), QuadratureConfig::MASS)?.value;
        if mass.is_nan() || mass <= 0.0 {
            return Err(Error::EmptyPlus);
        }
        let sigma2 = second / mass / d as f64;
        Self::new(1.0 / math::sqrt(sigma2), d, target.support_radius())
    }

    /// Density at a point of radius `r` inside the ball.
    pub fn density(&self, r: f64) -> f64 {
        let t2 = self.tau * self.tau;
        math::powf(t2 / (2.0 * math::PI), 0.5 * self.dim as f64) * math::exp(-0.5 * t2 * r * r)
            / self.ball_mass
    }

    /// One draw inside the ball; redraws outside it.
    fn draw<R: Rng + ?Sized>(&self, row: &mut [f64], rng: &mut R) -> Result<f64> {
        for _ in 0..10_000 {
            for x in row.iter_mut() {
                *x = standard_normal(rng) / self.tau;
            }
            let r = norm(row);
            if r <= self.support_radius && self.density(r) > 0.0 {
                return Ok(r);
            }
        }
        Err(Error::SamplerExhausted("surrogate draws keep leaving the support ball".into()))
    }
}

/// `mu(||w||) / q(w)` for each row; `ZeroSurrogate` where `q` underflows.
pub fn importance_ratios(target: &RadialSignedMeasure, surrogate: &GaussianSurrogate, vectors: &Matrix) -> Result<Vec<f64>> {
    vectors
        .row_iter()
        .map(|row| {
            let r = norm(row);
            let q = surrogate.density(r);
            if q.is_nan() || q <= 0.0 || r > surrogate.support_radius {
                return Err(Error::ZeroSurrogate { radius: r });
            }
            Ok(target.density(r) / q)
        })
        .collect()
}

/// Importance ratios divided by the target mass, so the mean weight estimates 1.
pub fn importance_weights(target: &RadialSignedMeasure, surrogate_tau: f64, vectors: &Matrix) -> Result<Vec<f64>> {
    let surrogate = GaussianSurrogate::new(surrogate_tau, target.ambient_dim(), target.support_radius())?;
    let mass = compute_mass(target, false)?.value;
    if mass.is_nan() || mass <= 0.0 {
        return Err(Error::EmptyPlus);
    }
    Ok(importance_ratios(target, &surrogate, vectors)?.into_iter().map(|w| w / mass).collect())
}

/// Draw from the surrogate and attach normalized importance weights.
pub fn sample_importance<R: Rng + ?Sized>(
    target: &RadialSignedMeasure,
    surrogate: &GaussianSurrogate,
    s: usize,
    rng: &mut R,
) -> Result<FrequencySample> {
    if surrogate.dim != target.ambient_dim() {
        return Err(Error::DimensionMismatch { expected: target.ambient_dim(), got: surrogate.dim });
    }
    let mass = compute_mass(target, false)?.value;
    if mass.is_nan() || mass <= 0.0 {
        return Err(Error::EmptyPlus);
    }
    let mut vectors = Matrix::zeros(s, surrogate.dim);
    for i in 0..s {
        surrogate.draw(vectors.row_mut(i), rng)?;
    }
    let weights = importance_ratios(target, surrogate, &vectors)?.into_iter().map(|w| w / mass).collect();
    Ok(FrequencySample { vectors, weights, tag: SampleTag::Importance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot;

    fn rng(seed: u64) -> ChaCha8Rng {
        RngStream::new(seed, 0).rng()
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| 0).scan(rng(3), |r, _| Some(r.random())).collect();
        let b: Vec<u64> = (0..4).map(|_| 0).scan(rng(3), |r, _| Some(r.random())).collect();
        assert_eq!(a, b);
        let base = RngStream::new(3, 0);
        assert_ne!(base.derive("x", 0), base.derive("x", 1));
        assert_ne!(base.derive("x", 0), base.derive("y", 0));
        assert_ne!(base.derive("x", 0).rng().random::<u64>(), base.derive("x", 1).rng().random::<u64>());
    }

    #[test]
    fn directions_are_unit_vectors() {
        let m = sample_sphere_directions(1, 100, &mut rng(1));
        assert!(m.as_slice().iter().all(|&x| x == 1.0 || x == -1.0));
        let m = sample_sphere_directions(7, 500, &mut rng(2));
        for row in m.row_iter() {
            assert!((norm(row) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn directions_have_zero_mean() {
        let m = sample_sphere_directions(8, 100_000, &mut rng(4));
        let mut mean = [0.0; 8];
        for row in m.row_iter() {
            for (a, b) in mean.iter_mut().zip(row) {
                *a += b / 1e5;
            }
        }
        assert!(norm(&mean) < 0.02);
    }

    #[test]
    fn gaussian_moments_and_scaling() {
        let tau = 2.0;
        let m = sample_gaussian(tau, 3, 10_000, &mut rng(5)).unwrap();
        for c in 0..3 {
            let col: Vec<f64> = m.row_iter().map(|r| r[c]).collect();
            let mean = col.iter().sum::<f64>() / 1e4;
            let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 1e4;
            assert!(mean.abs() < 3.0 * 0.5 / 100.0);
            assert!((var - 0.25).abs() < 0.025);
        }
        let tight = sample_gaussian(1e3, 4, 1000, &mut rng(6)).unwrap();
        assert!(tight.row_iter().all(|r| norm(r) < 10.0 * 2.0 / 1e3));
        assert!(sample_gaussian(0.0, 2, 1, &mut rng(0)).is_err());
    }

    #[test]
    fn orthogonal_blocks_keep_norms() {
        let g = sample_gaussian(1.0, 5, 12, &mut rng(7)).unwrap();
        let o = orthogonalize_block(&g, &mut rng(8)).unwrap();
        for i in 0..12 {
            assert!((norm(o.row(i)) - norm(g.row(i))).abs() < 1e-12);
        }
        for block in [0..5, 5..10, 10..12] {
            for i in block.clone() {
                for j in block.clone() {
                    if i < j {
                        let c = dot(o.row(i), o.row(j)) / (norm(o.row(i)) * norm(o.row(j)));
                        assert!(c.abs() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn rejection_breach_doubles_envelope() {
        // a spike narrower than the grid spacing is missed by the envelope search
        let mu = RadialSignedMeasure::new(
            RadialDensity::custom(|r| if (r - 0.50005).abs() < 4e-5 { 1e4 } else { 1.0 }),
            1,
            1.0,
        )
        .unwrap();
        let draws = sample_radius_rejection(&mu, 2000, &mut rng(9)).unwrap();
        assert_eq!(draws.radii.len(), 2000);
        assert!(draws.breaches == 0 || draws.envelope > 1e3);
        assert!(draws.acceptance_rate() > 0.0);
    }

    #[test]
    fn importance_identities() {
        let d = 4;
        let law = RadialSignedMeasure::new(RadialDensity::Gaussian { precision: 1.0, weight: 1.0 }, d, 10.0).unwrap();
        let sur = GaussianSurrogate::new(1.0, d, 10.0).unwrap();
        let v = sample_gaussian(1.0, d, 200, &mut rng(10)).unwrap();
        for w in importance_ratios(&law, &sur, &v).unwrap() {
            assert!((w - 1.0).abs() < 1e-10);
        }
        let doubled = law.scaled(2.0);
        for w in importance_ratios(&doubled, &sur, &v).unwrap() {
            assert!((w - 2.0).abs() < 1e-10);
        }
        let far = Matrix::from_rows(&[vec![11.0, 0.0, 0.0, 0.0]]).unwrap();
        assert!(matches!(importance_ratios(&law, &sur, &far), Err(Error::ZeroSurrogate { .. })));
    }

    #[test]
    fn samples_are_deterministic() {
        let mu = RadialSignedMeasure::new(RadialDensity::custom(|r| 1.0 + r), 3, 2.0).unwrap();
        for scheme in [SamplingScheme::Mc, SamplingScheme::Omc, SamplingScheme::Importance] {
            let a = sample_measure(&mu, 10, scheme, &mut rng(11)).unwrap();
            let b = sample_measure(&mu, 10, scheme, &mut rng(11)).unwrap();
            assert_eq!(a, b);
        }
    }
}
