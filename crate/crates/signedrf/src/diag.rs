//! Goodness-of-fit summaries for sampled frequency radii.

use serde::Serialize;
use signedrf_core::linalg::norm;
use signedrf_core::quadrature::{integrate, QuadratureConfig};
use signedrf_core::radial::RadialSignedMeasure;
use signedrf_core::sampling::FrequencySample;

use crate::Result;

/// Cumulative law of the radius `|omega|` under a nonnegative radial measure,
/// tabulated on `panels` equal panels of `(0, R]`.
#[derive(Debug, Clone)]
pub struct RadialCdf {
    radius: f64,
    cum: Vec<f64>,
}

impl RadialCdf {
    pub fn new(mu: &RadialSignedMeasure, panels: usize) -> Result<Self> {
        let d = mu.ambient_dim() as i32;
        let radius = mu.support_radius();
        let h = radius / panels as f64;
        let mut cum = Vec::with_capacity(panels + 1);
        cum.push(0.0);
        let mut acc = 0.0;
        for i in 0..panels {
            let piece = integrate(|r| mu.density(r).max(0.0) * r.powi(d - 1), h * i as f64, h * (i + 1) as f64, QuadratureConfig::MASS)?;
            acc += piece.value;
            cum.push(acc);
        }
        if acc > 0.0 {
            cum.iter_mut().for_each(|c| *c /= acc);
        }
        Ok(Self { radius, cum })
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        if r >= self.radius {
            return 1.0;
        }
        let n = self.cum.len() - 1;
        let t = r / self.radius * n as f64;
        let i = (t.floor() as usize).min(n - 1);
        let f = t - i as f64;
        self.cum[i] + f * (self.cum[i + 1] - self.cum[i])
    }
}

/// Two-sided Kolmogorov-Smirnov statistic of `xs` against `cdf`.
pub fn ks_statistic(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic p-value of the KS statistic (Stephens' small-sample correction).
pub fn ks_p_value(stat: f64, n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * stat;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut p = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        p += if k % 2 == 1 { 2.0 * term } else { -2.0 * term };
        if term < 1e-16 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleSummary {
    pub tag: &'static str,
    pub s: usize,
    pub mean_radius: f64,
    pub max_radius: f64,
    pub mean_weight: f64,
    /// `(sum w)^2 / sum w^2`.
    pub effective_size: f64,
    /// KS statistic of the radii against the target law; unweighted schemes only.
    pub ks_statistic: Option<f64>,
    pub ks_p_value: Option<f64>,
}

pub fn summarize(sample: &FrequencySample, cdf: &RadialCdf) -> SampleSummary {
    let radii: Vec<f64> = sample.vectors.row_iter().map(norm).collect();
    let n = radii.len().max(1) as f64;
    let sw: f64 = sample.weights.iter().sum();
    let sw2: f64 = sample.weights.iter().map(|w| w * w).sum();
    let weighted = sample.weights.iter().any(|&w| w != 1.0);
    let ks = (!weighted && !radii.is_empty()).then(|| ks_statistic(&radii, |r| cdf.eval(r)));
    SampleSummary {
        tag: sample.tag.name(),
        s: sample.len(),
        mean_radius: radii.iter().sum::<f64>() / n,
        max_radius: radii.iter().copied().fold(0.0, f64::max),
        mean_weight: sw / n,
        effective_size: if sw2 > 0.0 { sw * sw / sw2 } else { 0.0 },
        ks_statistic: ks,
        ks_p_value: ks.map(|k| ks_p_value(k, radii.len())),
    }
}
