//! Rates under a change of variables `θ = Ψ(ϑ)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Result, SurroError};
use crate::linalg::{Matrix, RatePair};
use crate::rates::curvature::{curvature_fd, theoretical_rates, FdSpec};
use crate::surrogate::{ConvexDomain, FnSurrogate, Surrogate};

type MapFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type JacFn = Arc<dyn Fn(&[f64]) -> Matrix + Send + Sync>;

/// A diffeomorphism `Ψ` with its inverse and Jacobian `∂Ψ`.
#[derive(Clone)]
pub struct Reparametrization {
    pub psi: MapFn,
    pub psi_inv: MapFn,
    pub jacobian: JacFn,
}

impl fmt::Debug for Reparametrization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Reparametrization")
    }
}

impl Reparametrization {
    pub fn new(
        psi: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        psi_inv: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        jacobian: impl Fn(&[f64]) -> Matrix + Send + Sync + 'static,
    ) -> Self {
        Self {
            psi: Arc::new(psi),
            psi_inv: Arc::new(psi_inv),
            jacobian: Arc::new(jacobian),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(|x| x.to_vec(), |x| x.to_vec(), move |_| Matrix::identity(dim))
    }

    /// The same scalar map applied to every coordinate.
    pub fn coordinatewise(
        psi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        psi_inv: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dpsi: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(
            move |x| x.iter().map(|&v| psi(v)).collect(),
            move |x| x.iter().map(|&v| psi_inv(v)).collect(),
            move |x| Matrix::from_diag(&x.iter().map(|&v| dpsi(v)).collect::<Vec<_>>()),
        )
    }
}

/// `Q̌_ϑ(ϑ′) = Q_{Ψ(ϑ)}(Ψ(ϑ′))`, used only for curvature extraction, so it
/// lives on the whole space.
fn pull_back(problem: Arc<dyn Surrogate>, diffeo: &Reparametrization) -> FnSurrogate {
    let dim = problem.dim();
    let (p1, psi1) = (problem.clone(), diffeo.psi.clone());
    let (p2, psi2, jac) = (problem.clone(), diffeo.psi.clone(), diffeo.jacobian.clone());
    FnSurrogate::new(
        format!("{} (reparametrized)", problem.label()),
        ConvexDomain::FullSpace { dim },
        move |t, tn| p1.value(&psi1(t), &psi1(tn)),
        move |t, tn| {
            let g = p2.grad2(&psi2(t), &psi2(tn))?;
            Ok(jac(tn).transpose().matvec(&g))
        },
    )
}

/// Finite-difference rate pairs of the original problem at `θ⋆` and of the
/// pulled-back problem at `Ψ⁻¹(θ⋆)`. Only full-dimensional domains are
/// supported.
pub fn reparam_invariance_check(
    problem: Arc<dyn Surrogate>,
    theta_star: &[f64],
    diffeo: &Reparametrization,
    fd: &FdSpec,
) -> Result<(RatePair, RatePair)> {
    if !problem.domain().is_full_dimensional() {
        return Err(SurroError::InvalidArgument(
            "reparametrization check needs a full-dimensional domain".into(),
        ));
    }
    let original = theoretical_rates(&curvature_fd(problem.as_ref(), theta_star, fd)?)?;
    let pulled = pull_back(problem, diffeo);
    let vartheta = (diffeo.psi_inv)(theta_star);
    let reparam = theoretical_rates(&curvature_fd(&pulled, &vartheta, fd)?)?;
    Ok((original, reparam))
}
