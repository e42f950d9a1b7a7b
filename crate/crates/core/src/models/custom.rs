//! Hand-built surrogates used for checks that need a specific geometry.

use crate::linalg::{Matrix, SymMatrix};
use crate::surrogate::{ConvexDomain, FnSurrogate};

/// `Q_{θ0}(θ1) = θ0² − θ0θ1 + θ1²` on `[1, ∞)`: the fixed point `θ⋆ = 1`
/// sits on the boundary, where reparametrization changes the rates.
pub fn boundary_counterexample() -> FnSurrogate {
    let domain = ConvexDomain::Box {
        lower: vec![1.0],
        upper: vec![f64::INFINITY],
    };
    FnSurrogate::new(
        "boundary_counterexample",
        domain,
        |t, tn| Ok(t[0] * t[0] - t[0] * tn[0] + tn[0] * tn[0]),
        |t, tn| Ok(vec![2.0 * tn[0] - t[0]]),
    )
    .with_hess22(|_, _| Ok(SymMatrix::scalar(2.0)))
    .with_hess12(|_, _| Ok(Matrix::from_diag(&[-1.0])))
    .with_closed_form(|t| Ok(vec![(0.5 * t[0]).max(1.0)]))
}
