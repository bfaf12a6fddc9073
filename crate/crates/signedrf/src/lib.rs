//! IO, benchmark harness and command line on top of [`signedrf_core`].
//!
//! | module | contents |
//! |--------|----------|
//! | [`libsvm`] | LIBSVM text parser and writer |
//! | [`formats`] | spectrum, feature and frequency files; atomic writes |
//! | [`bench`] | benchmark cells, reports, error curves, one-vs-rest classifier |
//! | [`diag`] | radial goodness-of-fit summaries |
//! | [`config`] | kernel parameters and feature-count parsing |
//! | [`cli`] | the `signedrf` subcommands |

pub use signedrf_core as core;

pub mod bench;
pub mod cli;
pub mod config;
pub mod diag;
mod error;
pub mod formats;
pub mod libsvm;

pub use error::{Error, Result};
