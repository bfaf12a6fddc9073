use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Every failure the numeric core can report.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid kernel parameters: {0}")]
    InvalidKernel(String),
    #[error("total mass {mass:e} is infinite or exceeds the ceiling {ceiling:e}")]
    InfiniteMass { mass: f64, ceiling: f64 },
    #[error("quadrature did not converge (achieved relative tolerance {achieved:e})")]
    NonConvergent { achieved: f64 },
    #[error("signed mass {signed_mass:e} is too small to infer a calibration constant")]
    DegenerateCalibration { signed_mass: f64 },
    #[error("no closed-form spectrum for {0}; use the numeric forward transform")]
    UnsupportedSpectrum(String),
    #[error("Bessel order {order} exceeds the validated range (max {max})")]
    OrderOverflow { order: f64, max: f64 },
    #[error("orthogonal frame degenerated after {attempts} attempts")]
    RankDeficient { attempts: u32 },
    #[error("both measure components have zero mass (zero kernel)")]
    EmptyPlus,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("row {row} has norm {norm} but a spherical kernel needs unit-norm rows")]
    DataNotNormalized { row: usize, norm: f64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("reference matrix has zero Frobenius norm")]
    ZeroDenominator,
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NonSymmetric { asymmetry: f64 },
    #[error("labels must be -1/+1, found {0}")]
    NonBinaryLabels(i32),
    #[error("surrogate density underflows at radius {radius}")]
    ZeroSurrogate { radius: f64 },
    #[error("sampler gave up: {0}")]
    SamplerExhausted(String),
}
