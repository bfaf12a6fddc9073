//! Radial signed measures on `R^d`: masses, the Jordan split, calibration and
//! the radial (Hankel-type) transforms pairing a density with a radial kernel.
//!
//! A measure is stored by its radial density `mu(r)`; all integrals over `R^d`
//! reduce to `S_(d-1) * int_0^R f(r) r^(d-1) dr` with `R` the support radius.

use crate::kernels::KernelSpec;
use crate::math::{self, PI};
use crate::quadrature::{integrate, integrate_piecewise, QuadratureConfig};
use crate::specfun::{j_nu_scaled, radial_characteristic, surface_area};
use crate::{Error, Result};
use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

pub const DEFAULT_SUPPORT_RADIUS: f64 = 10.0;
/// Unsigned masses above this are treated as infinite.
pub const MASS_CEILING: f64 = 1e12;
/// Largest acceptable ratio of the truncation tail bound to the unsigned mass.
pub const TAIL_BUDGET: f64 = 1e-2;
const SIGN_SCAN_POINTS: usize = 4000;

/// One term `coef * r^power * J_order(2r) / r^order`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselTerm {
    pub coef: f64,
    pub power: f64,
    pub order: f64,
}

impl BesselTerm {
    fn eval(&self, r: f64) -> f64 {
        let p = if self.power == 0.0 { 1.0 } else { math::powf(r, self.power) };
        self.coef * p * j_nu_scaled(self.order, 2.0 * r)
    }
}

pub type DensityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum RadialDensity {
    Zero,
    /// `weight * (precision / 2pi)^(d/2) * exp(-precision r^2 / 2)`, the density
    /// of `weight * N(0, precision^-1 I_d)`.
    Gaussian { precision: f64, weight: f64 },
    BesselSeries(Vec<BesselTerm>),
    /// Linear interpolation of `values[i]` at `r = i * step`; zero past the table.
    Tabulated { step: f64, values: Vec<f64> },
    Sum(Vec<RadialDensity>),
    Scaled(f64, Box<RadialDensity>),
    PositivePart(Box<RadialDensity>),
    NegativePart(Box<RadialDensity>),
    Custom(DensityFn),
}

impl fmt::Debug for RadialDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => f.write_str("Zero"),
            Self::Gaussian { precision, weight } => {
                f.debug_struct("Gaussian").field("precision", precision).field("weight", weight).finish()
            }
            Self::BesselSeries(t) => f.debug_tuple("BesselSeries").field(t).finish(),
            Self::Tabulated { step, values } => {
                f.debug_struct("Tabulated").field("step", step).field("len", &values.len()).finish()
            }
            Self::Sum(parts) => f.debug_tuple("Sum").field(parts).finish(),
            Self::Scaled(k, inner) => f.debug_tuple("Scaled").field(k).field(inner).finish(),
            Self::PositivePart(inner) => f.debug_tuple("PositivePart").field(inner).finish(),
            Self::NegativePart(inner) => f.debug_tuple("NegativePart").field(inner).finish(),
            Self::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl RadialDensity {
    pub fn custom<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        Self::Custom(Arc::new(f))
    }

    /// `mu(r)` for a measure on `R^d`.
    pub fn eval(&self, d: usize, r: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Gaussian { precision, weight } => {
                weight * math::powf(precision / (2.0 * PI), 0.5 * d as f64) * math::exp(-0.5 * precision * r * r)
            }
            Self::BesselSeries(terms) => terms.iter().map(|t| t.eval(r)).sum(),
            Self::Tabulated { step, values } => {
                let x = r / step;
                let i = math::floor(x) as usize;
                if values.is_empty() || x < 0.0 || i + 1 > values.len() {
                    return 0.0;
                }
                if i + 1 == values.len() {
                    return if x == i as f64 { values[i] } else { 0.0 };
                }
                let t = x - i as f64;
                values[i] * (1.0 - t) + values[i + 1] * t
            }
            Self::Sum(parts) => parts.iter().map(|p| p.eval(d, r)).sum(),
            Self::Scaled(k, inner) => k * inner.eval(d, r),
            Self::PositivePart(inner) => inner.eval(d, r).max(0.0),
            Self::NegativePart(inner) => (-inner.eval(d, r)).max(0.0),
            Self::Custom(f) => f(r),
        }
    }

    fn is_nonnegative(&self) -> bool {
        match self {
            Self::Zero | Self::PositivePart(_) | Self::NegativePart(_) => true,
            Self::Gaussian { weight, .. } => *weight >= 0.0,
            Self::Scaled(k, inner) => *k >= 0.0 && inner.is_nonnegative(),
            Self::Sum(parts) => parts.iter().all(|p| p.is_nonnegative()),
            _ => false,
        }
    }

    /// Upper bound on `S_(d-1) int_R^inf |mu(r)| r^(d-1) dr` from the large-radius
    /// envelope `|J_nu(x)| <= sqrt(2 / (pi x))`. `None` when no envelope is known,
    /// `Some(inf)` when the envelope is not integrable.
    pub fn tail_bound(&self, d: usize, radius: f64) -> Option<f64> {
        let s = surface_area(d);
        match self {
            Self::Zero => Some(0.0),
            Self::Tabulated { step, values } => {
                if radius >= step * values.len().saturating_sub(1) as f64 { Some(0.0) } else { None }
            }
            Self::Gaussian { precision, .. } => {
                let width = 1.0 / math::sqrt(*precision);
                let hi = radius.max(math::sqrt(d as f64) * width) + 40.0 * width;
                let f = |r: f64| s * self.eval(d, r).abs() * math::powi(r, d as i32 - 1);
                integrate(f, radius, hi, QuadratureConfig::MASS).ok().map(|i| i.value)
            }
            Self::BesselSeries(terms) => {
                let mut total = 0.0;
                for t in terms {
                    // |term| <= |coef| r^(power - order - 1/2) / sqrt(pi)
                    let q = t.power - t.order - 0.5 + (d as f64 - 1.0);
                    if q >= -1.0 {
                        return Some(f64::INFINITY);
                    }
                    total += s * t.coef.abs() / math::sqrt(PI) * math::powf(radius, q + 1.0) / (-q - 1.0);
                }
                Some(total)
            }
            Self::Sum(parts) => parts.iter().map(|p| p.tail_bound(d, radius)).sum(),
            Self::Scaled(k, inner) => inner.tail_bound(d, radius).map(|t| k.abs() * t),
            Self::PositivePart(inner) | Self::NegativePart(inner) => inner.tail_bound(d, radius),
            Self::Custom(_) => None,
        }
    }

    /// The signed density whose sign changes determine this one's kinks.
    fn signed_base(&self) -> &RadialDensity {
        match self {
            Self::Scaled(_, inner) | Self::PositivePart(inner) | Self::NegativePart(inner) => inner.signed_base(),
            other => other,
        }
    }
}

/// Where a measure came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumSource {
    ClosedForm,
    Numeric,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Provenance {
    pub source: SpectrumSource,
    /// Cumulative calibration factor applied to the source density.
    pub calibration: Option<f64>,
}

/// A radially symmetric signed measure truncated to the ball of radius
/// `support_radius`.
#[derive(Debug, Clone)]
pub struct RadialSignedMeasure {
    density: RadialDensity,
    ambient_dim: usize,
    support_radius: f64,
    provenance: Provenance,
    /// Sign changes of the density inside the support.
    sign_changes: Vec<f64>,
}

impl RadialSignedMeasure {
    pub fn new(density: RadialDensity, ambient_dim: usize, support_radius: f64) -> Result<Self> {
        Self::with_provenance(density, ambient_dim, support_radius, Provenance { source: SpectrumSource::Custom, calibration: None })
    }

    pub fn with_provenance(
        density: RadialDensity,
        ambient_dim: usize,
        support_radius: f64,
        provenance: Provenance,
    ) -> Result<Self> {
        if ambient_dim == 0 {
            return Err(Error::Domain("ambient dimension must be >= 1".into()));
        }
        if !(support_radius.is_finite() && support_radius > 0.0) {
            return Err(Error::Domain(alloc::format!("support radius must be finite and > 0, got {support_radius}")));
        }
        let sign_changes = find_sign_changes(density.signed_base(), ambient_dim, support_radius);
        Ok(Self { density, ambient_dim, support_radius, provenance, sign_changes })
    }

    fn derived(&self, density: RadialDensity, provenance: Provenance) -> Self {
        Self {
            density,
            ambient_dim: self.ambient_dim,
            support_radius: self.support_radius,
            provenance,
            sign_changes: self.sign_changes.clone(),
        }
    }

    pub fn density(&self, r: f64) -> f64 {
        self.density.eval(self.ambient_dim, r)
    }

    pub fn density_fn(&self) -> &RadialDensity {
        &self.density
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn sign_changes(&self) -> &[f64] {
        &self.sign_changes
    }

    /// `kappa * mu`.
    pub fn scaled(&self, kappa: f64) -> Self {
        let calibration = Some(self.provenance.calibration.unwrap_or(1.0) * kappa);
        self.derived(
            RadialDensity::Scaled(kappa, Box::new(self.density.clone())),
            Provenance { calibration, ..self.provenance },
        )
    }

    /// Quadrature breakpoints: the origin, interior sign changes and the support radius.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = Vec::with_capacity(self.sign_changes.len() + 2);
        b.push(0.0);
        b.extend_from_slice(&self.sign_changes);
        b.push(self.support_radius);
        b
    }
}

fn find_sign_changes(density: &RadialDensity, d: usize, radius: f64) -> Vec<f64> {
    if density.is_nonnegative() {
        return Vec::new();
    }
    let h = radius / SIGN_SCAN_POINTS as f64;
    let mut out = Vec::new();
    let mut prev_r = h * 1e-3;
    let mut prev = density.eval(d, prev_r);
    for i in 1..=SIGN_SCAN_POINTS {
        let r = h * i as f64;
        let v = density.eval(d, r);
        if v == 0.0 {
            continue;
        }
        if prev != 0.0 && (v > 0.0) != (prev > 0.0) {
            let (mut lo, mut hi) = (prev_r, r);
            let lo_pos = prev > 0.0;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if (density.eval(d, mid) > 0.0) == lo_pos {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        prev = v;
        prev_r = r;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassEstimate {
    pub value: f64,
    /// Relative change at the last quadrature refinement.
    pub achieved: f64,
    /// Envelope bound on the mass beyond the support radius (see
    /// [`RadialDensity::tail_bound`]).
    pub tail_bound: Option<f64>,
}

impl MassEstimate {
    /// Whether the tail bound is known and below `TAIL_BUDGET` of `unsigned_mass`.
    pub fn tail_within_budget(&self, unsigned_mass: f64) -> bool {
        matches!(self.tail_bound, Some(t) if t < TAIL_BUDGET * unsigned_mass)
    }
}

/// `S_(d-1) int_0^R f(r) r^(d-1) dr` with `f = mu` (signed) or `|mu|`.
pub fn compute_mass(mu: &RadialSignedMeasure, signed: bool) -> Result<MassEstimate> {
    let d = mu.ambient_dim();
    let s = surface_area(d);
    let integrand = |r: f64| {
        let v = mu.density(r);
        s * if signed { v } else { v.abs() } * math::powi(r, d as i32 - 1)
    };
    let integral = integrate_piecewise(integrand, &mu.breakpoints(), QuadratureConfig::MASS)?;
    let tail_bound = mu.density.tail_bound(d, mu.support_radius());
    let estimate = MassEstimate { value: integral.value, achieved: integral.achieved, tail_bound };
    if !signed && !estimate.tail_within_budget(integral.value) {
        log::warn!("truncation tail bound {:?} exceeds {} of mass {}", tail_bound, TAIL_BUDGET, integral.value);
    }
    Ok(estimate)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitKind {
    /// `mu_plus = max(mu, 0)`, `mu_minus = max(-mu, 0)`.
    Jordan,
    /// Analytic components that may overlap (e.g. a difference of Gaussians).
    Components,
}

/// `mu = c1 * mu_plus - c2 * mu_minus`, with unit constants unless stated.
#[derive(Debug, Clone)]
pub struct DecomposedMeasure {
    pub mu_plus: RadialSignedMeasure,
    pub mu_minus: RadialSignedMeasure,
    pub mass_plus: f64,
    pub mass_minus: f64,
    pub c1: f64,
    pub c2: f64,
    pub kind: SplitKind,
}

impl DecomposedMeasure {
    pub fn from_components(
        mu_plus: RadialSignedMeasure,
        mu_minus: RadialSignedMeasure,
        c1: f64,
        c2: f64,
    ) -> Result<Self> {
        if mu_plus.ambient_dim() != mu_minus.ambient_dim() {
            return Err(Error::DimensionMismatch { expected: mu_plus.ambient_dim(), got: mu_minus.ambient_dim() });
        }
        let mass_plus = checked_mass(&mu_plus, MASS_CEILING)?;
        let mass_minus = checked_mass(&mu_minus, MASS_CEILING)?;
        Ok(Self { mu_plus, mu_minus, mass_plus, mass_minus, c1, c2, kind: SplitKind::Components })
    }

    pub fn ambient_dim(&self) -> usize {
        self.mu_plus.ambient_dim()
    }

    /// `c1 mu_plus(r) - c2 mu_minus(r)`.
    pub fn signed_density(&self, r: f64) -> f64 {
        self.c1 * self.mu_plus.density(r) - self.c2 * self.mu_minus.density(r)
    }

    /// The kernel is positive definite when the negative part carries no mass.
    pub fn is_positive_definite(&self) -> bool {
        self.mass_minus <= 1e-15 * self.mass_plus
    }

    /// `c1 ||mu_plus||` and `c2 ||mu_minus||`, the feature block scales.
    pub fn block_scales(&self) -> (f64, f64) {
        (self.c1 * self.mass_plus, self.c2 * self.mass_minus)
    }
}

fn checked_mass(mu: &RadialSignedMeasure, ceiling: f64) -> Result<f64> {
    let m = match compute_mass(mu, false) {
        Ok(m) => m.value,
        Err(Error::NonConvergent { .. }) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    if !m.is_finite() || m > ceiling {
        return Err(Error::InfiniteMass { mass: m, ceiling });
    }
    Ok(m)
}

/// Jordan decomposition with the default mass ceiling.
pub fn jordan_split(mu: &RadialSignedMeasure) -> Result<DecomposedMeasure> {
    jordan_split_with_ceiling(mu, MASS_CEILING)
}

pub fn jordan_split_with_ceiling(mu: &RadialSignedMeasure, ceiling: f64) -> Result<DecomposedMeasure> {
    let plus = mu.derived(RadialDensity::PositivePart(Box::new(mu.density.clone())), mu.provenance);
    let minus = mu.derived(RadialDensity::NegativePart(Box::new(mu.density.clone())), mu.provenance);
    let mass_plus = checked_mass(&plus, ceiling)?;
    let mass_minus = checked_mass(&minus, ceiling)?;
    Ok(DecomposedMeasure { mu_plus: plus, mu_minus: minus, mass_plus, mass_minus, c1: 1.0, c2: 1.0, kind: SplitKind::Jordan })
}

/// Scale `mu` so its signed mass equals `k(0)`.
pub fn calibrate(mu: &RadialSignedMeasure, kernel: &KernelSpec) -> Result<RadialSignedMeasure> {
    let signed = compute_mass(mu, true)?.value;
    if signed.abs() < 1e-12 {
        return Err(Error::DegenerateCalibration { signed_mass: signed });
    }
    let k0 = kernel.eval(0.0);
    if k0 == 0.0 {
        return Err(Error::DegenerateCalibration { signed_mass: signed });
    }
    Ok(mu.scaled(k0 / signed))
}

/// `k(z) = S_(d-1) int_0^R mu(r) r^(d-1) h_d(r z) dr`.
pub fn radial_inverse_transform(mu: &RadialSignedMeasure, z: f64) -> Result<f64> {
    if !(z >= 0.0 && z.is_finite()) {
        return Err(Error::Domain(alloc::format!("distance must be finite and >= 0, got {z}")));
    }
    let d = mu.ambient_dim();
    let s = surface_area(d);
    let f = |r: f64| s * mu.density(r) * math::powi(r, d as i32 - 1) * radial_characteristic(d, r * z);
    Ok(integrate_piecewise(f, &mu.breakpoints(), QuadratureConfig::TRANSFORM)?.value)
}

/// `mu(omega) = (2 pi)^-d S_(d-1) int_0^zmax k(z) z^(d-1) h_d(omega z) dz`.
pub fn radial_forward_transform(kernel: &KernelSpec, omega: f64) -> Result<f64> {
    if !(omega >= 0.0 && omega.is_finite()) {
        return Err(Error::Domain(alloc::format!("frequency must be finite and >= 0, got {omega}")));
    }
    let d = kernel.input_dim();
    let c = surface_area(d) * math::powf(2.0 * PI, -(d as f64));
    let f = |z: f64| c * kernel.eval(z) * math::powi(z, d as i32 - 1) * radial_characteristic(d, omega * z);
    Ok(integrate(f, 0.0, kernel.radial_extent(), QuadratureConfig::TRANSFORM)?.value)
}

/// Forward transform tabulated on `points` equispaced radii over `[0, radius]`.
pub fn tabulate_forward_transform(kernel: &KernelSpec, radius: f64, points: usize) -> Result<RadialDensity> {
    if points < 2 {
        return Err(Error::Domain("a tabulated density needs at least two points".into()));
    }
    let step = radius / (points - 1) as f64;
    let mut values = vec![0.0; points];
    for (i, v) in values.iter_mut().enumerate() {
        *v = radial_forward_transform(kernel, step * i as f64)?;
    }
    Ok(RadialDensity::Tabulated { step, values })
}
