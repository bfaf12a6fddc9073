//! Closed-form radial spectral densities of the kernel families.
//!
//! Gaussian spectra are exact normal densities. The spherical polynomial and
//! arc-cosine densities are sums of `(2/r)^nu J_nu(2r)`-type terms whose overall
//! constant is fixed by calibrating the signed mass against `k(0)`. The NTK has
//! no closed form here; [`numeric_spectrum`] tabulates its forward transform.

use crate::kernels::{KernelFamily, KernelSpec};
use crate::math::{self, PI};
use crate::radial::{
    calibrate, jordan_split, tabulate_forward_transform, BesselTerm, DecomposedMeasure, Provenance, RadialDensity,
    RadialSignedMeasure, SpectrumSource, SplitKind, DEFAULT_SUPPORT_RADIUS,
};
use crate::specfun::MAX_VALIDATED_ORDER;
use crate::{Error, Result};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

/// Grid size of tabulated numeric spectra.
pub const NUMERIC_TABLE_POINTS: usize = 2001;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumSpec {
    pub kernel: KernelSpec,
    /// Series truncation of the arc-cosine spectra; only the first term is available.
    pub truncation_terms: u32,
    pub support_radius: f64,
}

impl SpectrumSpec {
    pub fn new(kernel: KernelSpec) -> Self {
        Self { kernel, truncation_terms: 1, support_radius: DEFAULT_SUPPORT_RADIUS }
    }

    pub fn with_support_radius(mut self, r: f64) -> Self {
        self.support_radius = r;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.support_radius.is_finite() && self.support_radius > 0.0) {
            return Err(Error::Domain(format!("support radius must be finite and > 0, got {}", self.support_radius)));
        }
        if self.truncation_terms != 1 {
            return Err(Error::UnsupportedSpectrum(format!(
                "arc-cosine series truncated after {} terms (only 1 is implemented)",
                self.truncation_terms
            )));
        }
        Ok(())
    }
}

fn check_order(order: f64) -> Result<()> {
    if order > MAX_VALIDATED_ORDER {
        return Err(Error::OrderOverflow { order, max: MAX_VALIDATED_ORDER });
    }
    Ok(())
}

/// Uncalibrated closed-form density of `kernel`.
pub fn raw_density(kernel: &KernelSpec) -> Result<RadialDensity> {
    let h = 0.5 * kernel.input_dim() as f64;
    let two_h = math::powf(2.0, h);
    Ok(match kernel.family() {
        KernelFamily::Gaussian { tau } => RadialDensity::Gaussian { precision: tau * tau, weight: 1.0 },
        KernelFamily::DeltaGaussian { tau1, tau2 } => RadialDensity::Sum(vec![
            RadialDensity::Gaussian { precision: tau1 * tau1, weight: 1.0 },
            RadialDensity::Gaussian { precision: tau2 * tau2, weight: -1.0 },
        ]),
        KernelFamily::SphericalPolynomial { a, p } => {
            check_order(h + p as f64)?;
            let a2 = a * a;
            let mut falling = 1.0;
            let mut terms = Vec::with_capacity(p as usize + 1);
            for i in 0..=p {
                if i > 0 {
                    falling *= (p - i + 1) as f64;
                }
                let order = h + i as f64;
                let coef = falling
                    * math::powi(1.0 - 4.0 / a2, (p - i) as i32)
                    * math::powi(2.0 / a2, i as i32)
                    * math::powf(2.0, order);
                if coef != 0.0 {
                    terms.push(BesselTerm { coef, power: 0.0, order });
                }
            }
            RadialDensity::BesselSeries(terms)
        }
        KernelFamily::ArcCosine0 => {
            check_order(h + 2.0)?;
            RadialDensity::BesselSeries(vec![
                BesselTerm { coef: two_h / 2.0, power: 0.0, order: h },
                BesselTerm { coef: 3.0 * two_h / PI, power: 2.0, order: h },
                BesselTerm { coef: -1.0 / PI, power: 2.0, order: h + 1.0 },
                BesselTerm { coef: -2.0 * two_h / PI, power: 2.0, order: h + 2.0 },
            ])
        }
        KernelFamily::ArcCosine1 => {
            check_order(h)?;
            let coef = (math::sqrt(2.0) - 1.0) / (2.0 * PI) * two_h;
            RadialDensity::BesselSeries(vec![BesselTerm { coef, power: 2.0, order: h }])
        }
        KernelFamily::NtkTwoLayerRelu => {
            return Err(Error::UnsupportedSpectrum("the two-layer ReLU NTK".into()));
        }
    })
}

/// The spectral measure of `spec.kernel`: exact for the Gaussian families,
/// calibrated to `k(0)` for the Bessel-series families.
pub fn spectrum_of(spec: &SpectrumSpec) -> Result<RadialSignedMeasure> {
    spec.validate()?;
    let density = raw_density(&spec.kernel)?;
    let d = spec.kernel.input_dim();
    let closed = Provenance { source: SpectrumSource::ClosedForm, calibration: None };
    let mu = RadialSignedMeasure::with_provenance(density, d, spec.support_radius, closed)?;
    match spec.kernel.family() {
        KernelFamily::Gaussian { .. } | KernelFamily::DeltaGaussian { .. } => Ok(mu),
        _ => calibrate(&mu, &spec.kernel),
    }
}

/// Forward transform of the exact kernel tabulated on `points` radii over the
/// support. Not calibrated.
pub fn numeric_spectrum(spec: &SpectrumSpec, points: usize) -> Result<RadialSignedMeasure> {
    spec.validate()?;
    let density = tabulate_forward_transform(&spec.kernel, spec.support_radius, points)?;
    let numeric = Provenance { source: SpectrumSource::Numeric, calibration: None };
    RadialSignedMeasure::with_provenance(density, spec.kernel.input_dim(), spec.support_radius, numeric)
}

/// Split into the two nonnegative measures the feature map samples from.
///
/// Gaussian families use their analytic components (each with unit mass and
/// sampled exactly); the others use the Jordan split of [`spectrum_of`], or of
/// [`numeric_spectrum`] for the NTK.
pub fn decompose(spec: &SpectrumSpec) -> Result<DecomposedMeasure> {
    spec.validate()?;
    let d = spec.kernel.input_dim();
    let r = spec.support_radius;
    let closed = Provenance { source: SpectrumSource::ClosedForm, calibration: None };
    let gauss = |tau: f64| {
        RadialSignedMeasure::with_provenance(
            RadialDensity::Gaussian { precision: tau * tau, weight: 1.0 },
            d,
            r,
            closed,
        )
    };
    let exact = |plus, minus, mass_minus| DecomposedMeasure {
        mu_plus: plus,
        mu_minus: minus,
        mass_plus: 1.0,
        mass_minus,
        c1: 1.0,
        c2: 1.0,
        kind: SplitKind::Components,
    };
    match spec.kernel.family() {
        KernelFamily::Gaussian { tau } => {
            let zero = RadialSignedMeasure::with_provenance(RadialDensity::Zero, d, r, closed)?;
            Ok(exact(gauss(tau)?, zero, 0.0))
        }
        KernelFamily::DeltaGaussian { tau1, tau2 } => Ok(exact(gauss(tau1)?, gauss(tau2)?, 1.0)),
        KernelFamily::NtkTwoLayerRelu => jordan_split(&numeric_spectrum(spec, NUMERIC_TABLE_POINTS)?),
        _ => jordan_split(&spectrum_of(spec)?),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignProfile {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
    pub min: f64,
    pub max: f64,
}

impl SignProfile {
    pub fn has_both_signs(&self) -> bool {
        self.positive > 0 && self.negative > 0
    }
}

/// Sign counts and extremes of the density over `grid`.
pub fn spectrum_sign_profile(mu: &RadialSignedMeasure, grid: &[f64]) -> SignProfile {
    let mut p = SignProfile { positive: 0, negative: 0, zero: 0, min: f64::INFINITY, max: f64::NEG_INFINITY };
    for &r in grid {
        let v = mu.density(r);
        if v > 0.0 {
            p.positive += 1;
        } else if v < 0.0 {
            p.negative += 1;
        } else {
            p.zero += 1;
        }
        p.min = p.min.min(v);
        p.max = p.max.max(v);
    }
    p
}

/// `n` equispaced points on `(0, radius]`.
pub fn radial_grid(radius: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| radius * i as f64 / n as f64).collect()
}
