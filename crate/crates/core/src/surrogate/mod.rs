//! The iteration framework: feasible sets, surrogates, inner minimization
//! and the outer loop.

pub mod bregman;
pub mod domain;
mod engine;
mod param;
mod problem;
pub mod solver;

pub use bregman::{bregman, bregman_project};
pub use domain::ConvexDomain;
pub use engine::{iterate, StopReason, StopRule, Trace};
pub use param::ParamVector;
pub use problem::{FnSurrogate, Surrogate};
pub use solver::{descent_certificate, inner_minimize, inner_minimize_with, InnerOptions};

use crate::error::Result;
use crate::linalg;

/// `‖M(θ) − θ‖₂`.
pub fn fixed_point_residual(problem: &dyn Surrogate, theta: &ParamVector) -> Result<f64> {
    let next = inner_minimize(problem, theta)?;
    Ok(linalg::dist2(&next, theta))
}
