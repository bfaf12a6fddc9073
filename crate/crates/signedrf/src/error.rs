use std::io;

use crate::libsvm::ParseError;

/// Failures surfaced by the IO layer and the command line.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] signedrf_core::Error),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad file format: {0}")]
    Format(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    /// Short machine-readable tag, stable across versions.
    pub fn kind(&self) -> &'static str {
        use signedrf_core::Error as C;
        match self {
            Error::Core(e) => match e {
                C::Domain(_) => "domain",
                C::InvalidKernel(_) => "invalid_kernel",
                C::InfiniteMass { .. } => "infinite_mass",
                C::NonConvergent { .. } => "non_convergent",
                C::DegenerateCalibration { .. } => "degenerate_calibration",
                C::UnsupportedSpectrum(_) => "unsupported_spectrum",
                C::OrderOverflow { .. } => "order_overflow",
                C::RankDeficient { .. } => "rank_deficient",
                C::EmptyPlus => "empty_plus",
                C::DimensionMismatch { .. } => "dimension_mismatch",
                C::DataNotNormalized { .. } => "data_not_normalized",
                C::ShapeMismatch(_) => "shape_mismatch",
                C::ZeroDenominator => "zero_denominator",
                C::NonSymmetric { .. } => "non_symmetric",
                C::NonBinaryLabels(_) => "non_binary_labels",
                C::ZeroSurrogate { .. } => "zero_surrogate",
                C::SamplerExhausted(_) => "sampler_exhausted",
            },
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
            Error::Format(_) => "format",
            Error::Config(_) => "config",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
