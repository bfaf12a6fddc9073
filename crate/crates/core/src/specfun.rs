//! Special functions needed by the spectral densities: Bessel functions of the
//! first kind for real order `nu >= 0`, the Gamma function and the surface area
//! of the unit sphere.
//!
//! `J_nu(x)` is evaluated with one of three methods:
//!
//! * ascending power series when `x^2/4 <= nu + 1` (terms shrink from the start,
//!   so there is no cancellation worth worrying about),
//! * the Hankel asymptotic expansion when `x >= max(30, nu^2)`, summed until the
//!   terms stop decreasing,
//! * Miller's backward recurrence everywhere in between, normalized with the
//!   Neumann-type identity `(x/2)^a / Gamma(a+1) = sum_j w_j J_{a+2j}(x)` where
//!   `a = nu - floor(nu)`.
//!
//! All three paths agree with a multi-precision series to about `1e-13` relative
//! away from the zeros of `J_nu`.

use crate::math::{self, PI};
use crate::{Error, Result};
use alloc::format;

/// Orders above this are rejected by the spectra (the validated range).
pub const MAX_VALIDATED_ORDER: f64 = 40.0;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Nonnegative, finite order of a Bessel function.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct BesselOrder(f64);

impl BesselOrder {
    pub fn new(nu: f64) -> Result<Self> {
        if !nu.is_finite() || nu < 0.0 {
            return Err(Error::Domain(format!("Bessel order must be finite and >= 0, got {nu}")));
        }
        Ok(Self(nu))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

fn check_argument(x: f64) -> Result<()> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::Domain(format!("Bessel argument must be finite and >= 0, got {x}")));
    }
    Ok(())
}

/// `J_nu(x)` for `nu >= 0`, `x >= 0`.
pub fn bessel_j(order: BesselOrder, x: f64) -> Result<f64> {
    check_argument(x)?;
    Ok(j_nu(order.0, x))
}

/// `J_nu(x) / (x/2)^nu`, an entire function of `x` equal to `1/Gamma(nu+1)` at 0.
///
/// Densities of the form `(2/w)^nu J_nu(2w)` are `2^nu` times this at `x = 2w`,
/// which removes the 0/0 at the origin.
pub fn bessel_j_scaled(order: BesselOrder, x: f64) -> Result<f64> {
    check_argument(x)?;
    Ok(j_nu_scaled(order.0, x))
}

pub(crate) fn j_nu(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    let y = 0.25 * x * x;
    if y <= nu + 1.0 {
        return math::powf(0.5 * x, nu) / gamma(nu + 1.0) * series_sum(nu, y);
    }
    let hankel_from = if nu * nu > 30.0 { nu * nu } else { 30.0 };
    if x >= hankel_from {
        hankel(nu, x)
    } else {
        miller(nu, x)
    }
}

pub(crate) fn j_nu_scaled(nu: f64, x: f64) -> f64 {
    let y = 0.25 * x * x;
    if y <= nu + 1.0 {
        series_sum(nu, y) / gamma(nu + 1.0)
    } else {
        j_nu(nu, x) / math::powf(0.5 * x, nu)
    }
}

/// `sum_k (-y)^k / (k! (nu+1)_k)`.
fn series_sum(nu: f64, y: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..1000 {
        let kf = k as f64;
        term *= -y / (kf * (kf + nu));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn hankel(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term: f64 = 1.0;
    for k in 1..200usize {
        let odd = (2 * k - 1) as f64;
        let next = term * (mu - odd * odd) / (8.0 * k as f64 * x);
        if next.abs() > term.abs() {
            break;
        }
        term = next;
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * term;
        } else {
            q += sign * term;
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - (0.5 * nu + 0.25) * PI;
    math::sqrt(2.0 / (PI * x)) * (p * math::cos(chi) - q * math::sin(chi))
}

fn miller(nu: f64, x: f64) -> f64 {
    let n0 = math::floor(nu) as usize;
    let frac = nu - n0 as f64;
    let reach = if nu > x { nu } else { x };
    let mut top = (math::ceil(reach) as usize) + 16 + math::ceil(math::sqrt(40.0 * reach)) as usize;
    if top % 2 == 1 {
        top += 1;
    }

    // Normalization weights w_j = (a+2j) Gamma(a+j) / (j! Gamma(a+1)), walked downwards.
    // g_j = Gamma(a+j) / (Gamma(a+1) j!) for j >= 1, w_0 = 1.
    let mut j = top / 2;
    let mut g = math::exp(ln_gamma(frac + j as f64) - ln_gamma(frac + 1.0) - ln_gamma(j as f64 + 1.0));

    let mut f_next = 0.0;
    let mut f_cur = 1.0;
    let mut norm = 0.0;
    let mut target = 0.0;
    let mut k = top;
    loop {
        if k == n0 {
            target = f_cur;
        }
        if k % 2 == 0 {
            let w = if j == 0 { 1.0 } else { (frac + 2.0 * j as f64) * g };
            norm += w * f_cur;
            if j >= 2 {
                g *= j as f64 / (frac + j as f64 - 1.0);
            }
            j = j.saturating_sub(1);
        }
        if k == 0 {
            break;
        }
        let f_prev = 2.0 * (frac + k as f64) / x * f_cur - f_next;
        f_next = f_cur;
        f_cur = f_prev;
        if f_cur.abs() > 1e200 {
            f_cur *= 1e-200;
            f_next *= 1e-200;
            norm *= 1e-200;
            target *= 1e-200;
        }
        k -= 1;
    }
    let prefactor = math::powf(0.5 * x, frac) / gamma(frac + 1.0);
    prefactor * target / norm
}

fn lanczos_sum(z: f64) -> f64 {
    let mut a = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        a += c / (z + i as f64);
    }
    a
}

pub(crate) fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        return PI / (math::sin(PI * x) * gamma(1.0 - x));
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    // split the power so t^(z+1/2) cannot overflow before Gamma itself does
    let half = math::powf(t, 0.5 * (z + 0.5));
    math::sqrt(2.0 * PI) * half * (half * math::exp(-t)) * lanczos_sum(z)
}

/// `ln Gamma(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        return math::ln(PI / math::abs(math::sin(PI * x))) - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    0.5 * math::ln(2.0 * PI) + (z + 0.5) * math::ln(t) - t + math::ln(lanczos_sum(z))
}

/// Gamma function for positive real arguments (Lanczos, `g = 7`).
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::Domain(format!("Gamma needs a finite positive argument, got {x}")));
    }
    Ok(gamma(x))
}

/// Surface area `2 pi^(d/2) / Gamma(d/2)` of the unit sphere in `R^d`.
pub fn sphere_surface_area(d: usize) -> Result<f64> {
    if d < 1 {
        return Err(Error::Domain("sphere surface area needs d >= 1".into()));
    }
    Ok(surface_area(d))
}

pub(crate) fn surface_area(d: usize) -> f64 {
    let half = 0.5 * d as f64;
    if d <= 100 {
        2.0 * math::powf(PI, half) / gamma(half)
    } else {
        math::exp(math::ln(2.0) + half * math::ln(PI) - ln_gamma(half))
    }
}

/// Normalized radial characteristic function
/// `h_d(u) = Gamma(d/2) (2/u)^(d/2-1) J_(d/2-1)(u)`, with `h_d(0) = 1`.
///
/// It is the average of `cos(u e . theta)` over uniformly distributed unit
/// vectors `theta`, i.e. the kernel pairing radial densities with radial kernels.
pub fn radial_characteristic(d: usize, u: f64) -> f64 {
    if d == 1 {
        return math::cos(u);
    }
    if d == 3 {
        return if u == 0.0 { 1.0 } else { math::sin(u) / u };
    }
    let nu = 0.5 * d as f64 - 1.0;
    gamma(nu + 1.0) * j_nu_scaled(nu, u)
}
