//! Inner minimization `θ ↦ argmin_{θ′ ∈ Θ} Q_θ(θ′)`.
//!
//! Order of preference: the problem's closed-form step, then projected
//! Newton on the direction space with Armijo backtracking (when `∂₂₂Q` is
//! available and the Newton point stays feasible), then projected gradient
//! with Barzilai–Borwein steps.

use crate::error::{Result, SurroError};
use crate::linalg::{self, SymMatrix};
use crate::rng::SurroRng;
use crate::surrogate::{ParamVector, Surrogate};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerOptions {
    pub use_closed_form: bool,
    pub max_iters: usize,
    /// Tolerance on the projected-gradient norm `‖x − Π(x − ∇)‖₂`.
    pub tol: f64,
    pub armijo_c: f64,
}

impl Default for InnerOptions {
    fn default() -> Self {
        Self {
            use_closed_form: true,
            max_iters: 500,
            tol: 1e-12,
            armijo_c: 1e-4,
        }
    }
}

impl InnerOptions {
    pub fn numeric() -> Self {
        Self {
            use_closed_form: false,
            ..Self::default()
        }
    }
}

/// Projected-gradient norms at or below this are accepted when the line
/// search can no longer make progress in floating point.
const ROUNDOFF_ACCEPT: f64 = 1e-8;
const MAX_BACKTRACKS: usize = 60;

/// One step of the minimization map `M(θ)`.
pub fn inner_minimize(problem: &dyn Surrogate, theta: &ParamVector) -> Result<ParamVector> {
    inner_minimize_with(problem, theta, &InnerOptions::default())
}

pub fn inner_minimize_with(
    problem: &dyn Surrogate,
    theta: &ParamVector,
    opts: &InnerOptions,
) -> Result<ParamVector> {
    let domain = problem.domain();
    if theta.dim() != domain.dim() {
        return Err(SurroError::DimensionMismatch {
            expected: domain.dim(),
            got: theta.dim(),
        });
    }
    if !domain.contains(theta) {
        return Err(SurroError::InfeasibleInput(format!(
            "{:?} is outside the domain",
            theta.coords()
        )));
    }
    if opts.use_closed_form {
        if let Some(step) = problem.closed_form_step(theta) {
            return Ok(ParamVector::from(step?));
        }
    }
    numeric_minimize(problem, theta, theta, opts).map(ParamVector::from)
}

/// Numeric minimization of `Q_θ` started from `start` (feasible).
pub(crate) fn numeric_minimize(
    problem: &dyn Surrogate,
    theta: &[f64],
    start: &[f64],
    opts: &InnerOptions,
) -> Result<Vec<f64>> {
    let domain = problem.domain();
    let basis = domain.direction_basis()?;
    let value = |x: &[f64]| problem.value(theta, x);

    let mut x = domain.project(start);
    let mut fx = value(&x)?;
    let mut grad = problem.grad2(theta, &x)?;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;

    for _ in 0..opts.max_iters {
        let pg_norm = projected_gradient_norm(domain, &x, &grad);
        if !pg_norm.is_finite() || !fx.is_finite() {
            return Err(SurroError::InternalNumericalFailure(
                "non-finite surrogate evaluation in inner solve".into(),
            ));
        }
        if pg_norm <= opts.tol {
            return Ok(x);
        }
        let roundoff_scale = 1e-13 * (1.0 + fx.abs());

        let mut accepted: Option<Vec<f64>> = None;
        if let Some(h) = problem.hess22(theta, &x) {
            let h = h?;
            if let Some(dir) = newton_direction(&h, &basis, &grad) {
                let slope = linalg::dot(&grad, &dir);
                if slope < 0.0 {
                    let mut t = 1.0;
                    for _ in 0..MAX_BACKTRACKS {
                        let y = linalg::axpy(&x, t, &dir);
                        let py = domain.project(&y);
                        if linalg::dist2(&py, &y) > 1e-15 * (1.0 + linalg::norm2(&y)) {
                            // Newton point leaves the set: use the projected-gradient path.
                            break;
                        }
                        let fy = value(&py)?;
                        if fy <= fx + opts.armijo_c * t * slope
                            || (-slope * t <= roundoff_scale && fy <= fx + roundoff_scale)
                        {
                            accepted = Some(py);
                            break;
                        }
                        t *= 0.5;
                    }
                }
            }
        }

        if accepted.is_none() {
            let mut t = match &prev {
                Some((dx, dg)) => {
                    let sy = linalg::dot(dx, dg);
                    let ss = linalg::dot(dx, dx);
                    if sy > 0.0 {
                        ss / sy
                    } else {
                        1.0
                    }
                }
                None => 1.0 / linalg::norm2(&grad).max(1.0),
            };
            for _ in 0..MAX_BACKTRACKS {
                let y = domain.project(&linalg::axpy(&x, -t, &grad));
                let fy = value(&y)?;
                let decrease = linalg::dot(&grad, &linalg::sub(&y, &x));
                if fy <= fx + opts.armijo_c * decrease
                    || (-decrease <= roundoff_scale && fy <= fx + roundoff_scale)
                {
                    accepted = Some(y);
                    break;
                }
                t *= 0.5;
            }
        }

        match accepted {
            Some(y) => {
                let g_new = problem.grad2(theta, &y)?;
                let dx = linalg::sub(&y, &x);
                let dg = linalg::sub(&g_new, &grad);
                if linalg::norm2(&dx) == 0.0 {
                    return finish_stalled(x, pg_norm);
                }
                prev = Some((dx, dg));
                fx = value(&y)?;
                x = y;
                grad = g_new;
            }
            None => return finish_stalled(x, pg_norm),
        }
    }
    let pg_norm = projected_gradient_norm(domain, &x, &grad);
    if pg_norm <= opts.tol.max(ROUNDOFF_ACCEPT) {
        return Ok(x);
    }
    Err(SurroError::InnerSolveFailed {
        iterations: opts.max_iters,
        residual: pg_norm,
    })
}

fn finish_stalled(x: Vec<f64>, pg_norm: f64) -> Result<Vec<f64>> {
    if pg_norm <= ROUNDOFF_ACCEPT {
        Ok(x)
    } else {
        Err(SurroError::InnerSolveFailed {
            iterations: 0,
            residual: pg_norm,
        })
    }
}

/// `‖x − Π(x − g)‖₂`.
pub fn projected_gradient_norm(
    domain: &crate::surrogate::ConvexDomain,
    x: &[f64],
    g: &[f64],
) -> f64 {
    let p = domain.project(&linalg::sub(x, g));
    linalg::dist2(x, &p)
}

/// Newton direction restricted to the column span of `basis`; `None` when
/// the reduced Hessian is not positive-definite.
fn newton_direction(h: &SymMatrix, basis: &linalg::Matrix, grad: &[f64]) -> Option<Vec<f64>> {
    let reduced = h.congruence(basis);
    linalg::positive_definite_spectrum(&reduced).ok()?;
    let g_red = basis.transpose().matvec(grad);
    let step = linalg::solve_symmetric(&reduced, &g_red).ok()?;
    Some(linalg::scale(&basis.matvec(&step), -1.0))
}

/// Descent-free certificate for a candidate minimizer: for `probes` random
/// feasible directions `δ` (differences of `θ′` with random feasible
/// points), `Q_θ(θ′ + tδ) ≥ Q_θ(θ′) − slack`. Returns the worst decrease
/// found (negative means a descent direction exists).
pub fn descent_certificate(
    problem: &dyn Surrogate,
    theta: &[f64],
    candidate: &[f64],
    probes: usize,
    t: f64,
    rng: &mut SurroRng,
) -> Result<f64> {
    let domain = problem.domain();
    let base = problem.value(theta, candidate)?;
    let mut worst = f64::INFINITY;
    for _ in 0..probes {
        let target = domain.sample(rng);
        let delta = linalg::sub(&target, candidate);
        let n = linalg::norm2(&delta);
        if n == 0.0 {
            continue;
        }
        let probe = linalg::axpy(candidate, t / n, &delta);
        let v = problem.value(theta, &probe)?;
        worst = worst.min(v - base);
    }
    Ok(worst)
}
