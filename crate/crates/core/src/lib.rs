//! Random feature maps for stationary *indefinite* kernels.
//!
//! A stationary kernel `k(x - x')` whose spectral measure is signed can still be
//! approximated without bias: split the measure into its positive and negative
//! parts `mu = mu_plus - mu_minus`, sample frequencies from each normalized part,
//! and subtract the two resulting cosine estimators. The feature map therefore
//! has a "real" block and an "imaginary" block whose inner products are
//! subtracted.
//!
//! The crate is `no_std` (with `alloc`); file formats, the benchmark harness and
//! the command line live in the companion `signedrf` crate.
//!
//! Module map:
//!
//! | module | contents |
//! |--------|----------|
//! | [`specfun`] | Bessel `J_nu`, Gamma, sphere surface areas |
//! | [`quadrature`] | composite Gauss-Legendre with panel halving |
//! | [`radial`] | radial signed measures, masses, Jordan split, calibration, Hankel-type transforms |
//! | [`kernels`] | exact kernels, Gram matrices, NTK Monte Carlo oracle |
//! | [`spectra`] | closed-form and tabulated spectral densities |
//! | [`sampling`] | frequency samplers (exact Gaussian, radial rejection, OMC, importance) |
//! | [`features`] | the signed feature map and estimator statistics |
//! | [`linalg`], [`data`], [`classifier`] | dense matrices, datasets, hinge-loss SGD |
#![cfg_attr(not(any(test, feature = "std")), no_std)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod classifier;
pub mod data;
mod error;
pub mod features;
pub mod kernels;
pub mod linalg;
pub(crate) mod math;
pub mod quadrature;
pub mod radial;
pub mod sampling;
pub mod spectra;
pub mod specfun;

pub use error::{Error, Result};
