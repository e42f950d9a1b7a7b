//! Experiment driver: configs, reports, acceptance suite.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod format;
pub mod run;
pub mod suite;
pub mod svg;
pub mod sweep;

pub use error::{CliError, CliResult};
