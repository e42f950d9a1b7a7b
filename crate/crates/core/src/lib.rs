//! Iterative surrogate minimization and asymptotic rate analysis.
//!
//! Every algorithm here is written as `θ_{n+1} = argmin_{θ′ ∈ Θ} Q_{θ_n}(θ′)`
//! for a bivariate surrogate `Q`. The [`surrogate`] module runs the
//! iteration, [`models`] builds concrete surrogates (mirror descent, mirror
//! prox, EM, α-EM, Newton), and [`rates`] turns curvature at the fixed point
//! into predicted geometric rates and compares them with traces.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod lemmas;
pub mod linalg;
pub mod models;
pub mod quadrature;
pub mod rates;
pub mod rng;
pub mod surrogate;

pub use error::{Result, SurroError};
pub use linalg::{Matrix, RatePair, Spectrum, SymMatrix};
pub use surrogate::{ConvexDomain, ParamVector, StopRule, Surrogate, Trace};
