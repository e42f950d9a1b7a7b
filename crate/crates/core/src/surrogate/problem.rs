use std::fmt;
use std::sync::Arc;

use crate::error::Result;
use crate::linalg::{Matrix, SymMatrix};
use crate::surrogate::ConvexDomain;

/// A bivariate surrogate `Q_θ(θ′)` over a convex feasible set.
///
/// One iteration of every algorithm in this crate is
/// `θ_{n+1} = argmin_{θ′ ∈ Θ} Q_{θ_n}(θ′)`. Implementors provide the value
/// and the gradient in the second argument; second derivatives, a
/// closed-form minimizer and a Lyapunov function are optional.
///
/// `hess12(θ, θ′)[i][j]` is `∂²Q / ∂θ_j ∂θ′_i`, so the curvature matrix
/// `B⋆` is `-hess12(θ⋆, θ⋆)`.
pub trait Surrogate: Send + Sync {
    fn label(&self) -> &str;

    fn domain(&self) -> &ConvexDomain;

    fn dim(&self) -> usize {
        self.domain().dim()
    }

    fn value(&self, theta: &[f64], theta_next: &[f64]) -> Result<f64>;

    /// `∂₂Q_θ(θ′)`.
    fn grad2(&self, theta: &[f64], theta_next: &[f64]) -> Result<Vec<f64>>;

    /// `∂₂₂Q_θ(θ′)`.
    fn hess22(&self, _theta: &[f64], _theta_next: &[f64]) -> Option<Result<SymMatrix>> {
        None
    }

    /// `∂₁₂Q_θ(θ′)`.
    fn hess12(&self, _theta: &[f64], _theta_next: &[f64]) -> Option<Result<Matrix>> {
        None
    }

    /// Exact minimizer of `Q_θ` over the domain, when known.
    fn closed_form_step(&self, _theta: &[f64]) -> Option<Result<Vec<f64>>> {
        None
    }

    /// A function non-increasing along the iteration.
    fn lyapunov(&self, _theta: &[f64]) -> Option<f64> {
        None
    }

    /// Auxiliary iterate recorded alongside each step (the intermediate
    /// point of extragradient-type schemes).
    fn aux_point(&self, _theta: &[f64]) -> Option<Result<Vec<f64>>> {
        None
    }
}

type ValueFn = Arc<dyn Fn(&[f64], &[f64]) -> Result<f64> + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64], &[f64]) -> Result<Vec<f64>> + Send + Sync>;
type Hess22Fn = Arc<dyn Fn(&[f64], &[f64]) -> Result<SymMatrix> + Send + Sync>;
type Hess12Fn = Arc<dyn Fn(&[f64], &[f64]) -> Result<Matrix> + Send + Sync>;
type StepFn = Arc<dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync>;
type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Surrogate assembled from closures.
#[derive(Clone)]
pub struct FnSurrogate {
    label: String,
    domain: ConvexDomain,
    value: ValueFn,
    grad2: GradFn,
    hess22: Option<Hess22Fn>,
    hess12: Option<Hess12Fn>,
    closed_form: Option<StepFn>,
    lyapunov: Option<ScalarFn>,
}

impl FnSurrogate {
    pub fn new(
        label: impl Into<String>,
        domain: ConvexDomain,
        value: impl Fn(&[f64], &[f64]) -> Result<f64> + Send + Sync + 'static,
        grad2: impl Fn(&[f64], &[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            domain,
            value: Arc::new(value),
            grad2: Arc::new(grad2),
            hess22: None,
            hess12: None,
            closed_form: None,
            lyapunov: None,
        }
    }

    pub fn with_hess22(
        mut self,
        f: impl Fn(&[f64], &[f64]) -> Result<SymMatrix> + Send + Sync + 'static,
    ) -> Self {
        self.hess22 = Some(Arc::new(f));
        self
    }

    pub fn with_hess12(
        mut self,
        f: impl Fn(&[f64], &[f64]) -> Result<Matrix> + Send + Sync + 'static,
    ) -> Self {
        self.hess12 = Some(Arc::new(f));
        self
    }

    pub fn with_closed_form(
        mut self,
        f: impl Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    ) -> Self {
        self.closed_form = Some(Arc::new(f));
        self
    }

    pub fn with_lyapunov(mut self, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.lyapunov = Some(Arc::new(f));
        self
    }
}

impl fmt::Debug for FnSurrogate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnSurrogate")
            .field("label", &self.label)
            .field("domain", &self.domain)
            .field("hess22", &self.hess22.is_some())
            .field("hess12", &self.hess12.is_some())
            .field("closed_form", &self.closed_form.is_some())
            .finish()
    }
}

impl Surrogate for FnSurrogate {
    fn label(&self) -> &str {
        &self.label
    }

    fn domain(&self) -> &ConvexDomain {
        &self.domain
    }

    fn value(&self, theta: &[f64], theta_next: &[f64]) -> Result<f64> {
        (self.value)(theta, theta_next)
    }

    fn grad2(&self, theta: &[f64], theta_next: &[f64]) -> Result<Vec<f64>> {
        (self.grad2)(theta, theta_next)
    }

    fn hess22(&self, theta: &[f64], theta_next: &[f64]) -> Option<Result<SymMatrix>> {
        self.hess22.as_ref().map(|h| h(theta, theta_next))
    }

    fn hess12(&self, theta: &[f64], theta_next: &[f64]) -> Option<Result<Matrix>> {
        self.hess12.as_ref().map(|h| h(theta, theta_next))
    }

    fn closed_form_step(&self, theta: &[f64]) -> Option<Result<Vec<f64>>> {
        self.closed_form.as_ref().map(|s| s(theta))
    }

    fn lyapunov(&self, theta: &[f64]) -> Option<f64> {
        self.lyapunov.as_ref().map(|l| l(theta))
    }
}
