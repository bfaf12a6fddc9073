//! Serializable run parameters shared by the harness and the command line.

use serde::Serialize;
use signedrf_core::kernels::{KernelFamily, KernelSpec};
use signedrf_core::sampling::SamplingScheme;

use crate::{Error, Result};

/// Kernel family plus parameters, without the input dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum KernelParams {
    Gaussian { tau: f64 },
    DeltaGaussian { tau1: f64, tau2: f64 },
    SphPoly { a: f64, p: u32 },
    Arccos0,
    Arccos1,
    Ntk,
}

impl KernelParams {
    pub fn family(self) -> KernelFamily {
        match self {
            KernelParams::Gaussian { tau } => KernelFamily::Gaussian { tau },
            KernelParams::DeltaGaussian { tau1, tau2 } => KernelFamily::DeltaGaussian { tau1, tau2 },
            KernelParams::SphPoly { a, p } => KernelFamily::SphericalPolynomial { a, p },
            KernelParams::Arccos0 => KernelFamily::ArcCosine0,
            KernelParams::Arccos1 => KernelFamily::ArcCosine1,
            KernelParams::Ntk => KernelFamily::NtkTwoLayerRelu,
        }
    }

    pub fn spec(self, dim: usize) -> Result<KernelSpec> {
        Ok(KernelSpec::new(self.family(), dim)?)
    }

    /// Compact label used in report rows and file names, e.g. `sph-poly-a2-p2`.
    pub fn label(self) -> String {
        match self {
            KernelParams::Gaussian { tau } => format!("gaussian-tau{tau}"),
            KernelParams::DeltaGaussian { tau1, tau2 } => format!("delta-gaussian-tau{tau1}-{tau2}"),
            KernelParams::SphPoly { a, p } => format!("sph-poly-a{a}-p{p}"),
            KernelParams::Arccos0 => "arccos0".into(),
            KernelParams::Arccos1 => "arccos1".into(),
            KernelParams::Ntk => "ntk".into(),
        }
    }
}

pub fn scheme_name(s: SamplingScheme) -> &'static str {
    match s {
        SamplingScheme::Mc => "mc",
        SamplingScheme::Omc => "omc",
        SamplingScheme::Importance => "importance",
    }
}

pub fn parse_scheme(s: &str) -> Result<SamplingScheme> {
    match s {
        "mc" => Ok(SamplingScheme::Mc),
        "omc" => Ok(SamplingScheme::Omc),
        "importance" => Ok(SamplingScheme::Importance),
        _ => Err(Error::Config(format!("unknown scheme {s:?} (expected mc, omc or importance)"))),
    }
}

/// A feature count, either absolute (`64`) or a multiple of the input
/// dimension (`8d`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SCount {
    Absolute(usize),
    TimesDim(usize),
}

impl SCount {
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        let bad = || Error::Config(format!("bad feature count {text:?} (expected N or Nd)"));
        let (digits, times) = match t.strip_suffix('d') {
            Some(k) => (k, true),
            None => (t, false),
        };
        let k: usize = if times && digits.is_empty() { 1 } else { digits.parse().map_err(|_| bad())? };
        if k == 0 {
            return Err(bad());
        }
        Ok(if times { SCount::TimesDim(k) } else { SCount::Absolute(k) })
    }

    pub fn resolve(self, dim: usize) -> usize {
        match self {
            SCount::Absolute(k) => k,
            SCount::TimesDim(k) => k * dim,
        }
    }
}

/// Comma-separated list of [`SCount`]s.
pub fn parse_s_list(text: &str) -> Result<Vec<SCount>> {
    text.split(',').map(SCount::parse).collect()
}
