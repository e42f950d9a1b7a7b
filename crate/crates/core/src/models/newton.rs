use crate::error::{Result, SurroError};
use crate::linalg::{self, SymMatrix};
use crate::models::Objective;
use crate::surrogate::{ConvexDomain, Surrogate};

/// Newton's method: `Q_θ(θ′) = ½‖θ′ − θ + ∂²f(θ)⁻¹∂f(θ)‖²`.
#[derive(Debug, Clone)]
pub struct Newton {
    f: Objective,
    domain: ConvexDomain,
}

impl Newton {
    pub fn new(f: Objective) -> Result<Self> {
        let domain = ConvexDomain::full_space(f.dim())?;
        Ok(Self { f, domain })
    }

    pub fn objective(&self) -> &Objective {
        &self.f
    }

    /// `θ − ∂²f(θ)⁻¹∂f(θ)`.
    fn newton_point(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let h = self.f.hess(theta)?;
        let g = self.f.grad(theta)?;
        let step = linalg::solve_symmetric(&h, &g).map_err(|_| SurroError::SingularHessian)?;
        Ok(linalg::sub(theta, &step))
    }
}

impl Surrogate for Newton {
    fn label(&self) -> &str {
        "newton"
    }

    fn domain(&self) -> &ConvexDomain {
        &self.domain
    }

    fn value(&self, theta: &[f64], theta_next: &[f64]) -> Result<f64> {
        let d = linalg::sub(theta_next, &self.newton_point(theta)?);
        Ok(0.5 * linalg::dot(&d, &d))
    }

    fn grad2(&self, theta: &[f64], theta_next: &[f64]) -> Result<Vec<f64>> {
        Ok(linalg::sub(theta_next, &self.newton_point(theta)?))
    }

    fn hess22(&self, theta: &[f64], _theta_next: &[f64]) -> Option<Result<SymMatrix>> {
        Some(Ok(SymMatrix::identity(theta.len())))
    }

    fn closed_form_step(&self, theta: &[f64]) -> Option<Result<Vec<f64>>> {
        Some(self.newton_point(theta))
    }
}

pub fn newton_problem(f: Objective) -> Result<Newton> {
    Newton::new(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surrogate::{inner_minimize, iterate, ParamVector, StopRule};

    #[test]
    fn quadratic_converges_in_one_step() {
        let f = Objective::quadratic(
            SymMatrix::from_rows(&[vec![3.0, 1.0], vec![1.0, 2.0]]),
            vec![0.5, -1.0],
        )
        .unwrap();
        let p = newton_problem(f).unwrap();
        let next = inner_minimize(&p, &ParamVector::from(vec![10.0, 7.0])).unwrap();
        assert!(linalg::dist2(&next, &[0.5, -1.0]) < 1e-12);
    }

    #[test]
    fn quartic_residuals_square() {
        let p = newton_problem(Objective::Quartic1D).unwrap();
        let trace = iterate(&p, &ParamVector::scalar(1.0), &StopRule::default()).unwrap();
        let e = trace.errors(&[0.0]);
        // Map x ↦ 2x³/(3x² + 1).
        assert!((e[1] - 0.5).abs() < 1e-15);
        for w in e.windows(2) {
            if w[0] < 0.1 {
                assert!(w[1] <= 2.0 * w[0] * w[0]);
            }
        }
    }

    #[test]
    fn singular_hessian_is_reported() {
        let f = Objective::custom(
            1,
            |x| Ok(x[0].powi(4)),
            |x| Ok(vec![4.0 * x[0].powi(3)]),
            |x| Ok(SymMatrix::scalar(12.0 * x[0] * x[0])),
            None,
        );
        let p = newton_problem(f).unwrap();
        let err = inner_minimize(&p, &ParamVector::scalar(0.0)).unwrap_err();
        assert_eq!(err, SurroError::SingularHessian);
    }
}
