//! Curvature matrices `A⋆ = ∂₂₂Q(θ⋆, θ⋆)`, `B⋆ = −∂₁₂Q(θ⋆, θ⋆)` and their
//! reduction to the direction space.

use crate::error::{Result, SurroError};
use crate::linalg::{self, Matrix, RatePair, SymMatrix};
use crate::rng::{self, SurroRng};
use crate::surrogate::{ConvexDomain, Surrogate};

/// Central-difference settings for curvature extraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdSpec {
    /// Step relative to `1 + ‖θ⋆‖`.
    pub step: f64,
    /// One level of Richardson extrapolation.
    pub richardson: bool,
}

impl Default for FdSpec {
    fn default() -> Self {
        Self {
            step: 1e-4,
            richardson: true,
        }
    }
}

impl FdSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(SurroError::InvalidArgument(format!(
                "finite-difference step must be positive, got {}",
                self.step
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurvatureSource {
    Analytic,
    FiniteDifference,
    /// Analytic `A`, finite-difference `B`, or the reverse.
    Mixed,
}

/// Curvature at a fixed point, full and reduced to the direction space `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureFrame {
    pub a_star: SymMatrix,
    pub b_star: SymMatrix,
    /// Orthonormal basis of `V`, as columns.
    pub p: Matrix,
    pub a_tilde: SymMatrix,
    pub b_tilde: SymMatrix,
    /// `‖B − Bᵀ‖_max` before symmetrization.
    pub asymmetry_diag: f64,
    /// Whether `vᵀÃv > |vᵀB̃v|` held on every sampled direction.
    pub h4_pass: bool,
    pub source: CurvatureSource,
}

impl CurvatureFrame {
    /// Assembles a frame from full `q × q` matrices.
    pub fn from_full(a: SymMatrix, b: SymMatrix, p: Matrix) -> Self {
        let a_tilde = a.congruence(&p);
        let b_tilde = b.congruence(&p);
        let h4_pass = h4_audit(&a_tilde, &b_tilde, H4_SAMPLES, &mut rng::seeded(H4_SEED, 0));
        Self {
            a_star: a,
            b_star: b,
            p,
            a_tilde,
            b_tilde,
            asymmetry_diag: 0.0,
            h4_pass,
            source: CurvatureSource::Analytic,
        }
    }

    pub fn reduced_dim(&self) -> usize {
        self.p.cols()
    }

    /// `Ã⁻¹B̃` as a (generally non-symmetric) matrix.
    pub fn rate_matrix(&self) -> Result<Matrix> {
        Ok(linalg::inverse_spd(&self.a_tilde)?
            .as_matrix()
            .matmul(self.b_tilde.as_matrix()))
    }
}

const H4_SAMPLES: usize = 10_000;
const H4_SEED: u64 = 0x4834;

/// Orthonormal basis of the direction space of `domain`, after checking
/// that `θ⋆` is feasible.
pub fn direction_basis(domain: &ConvexDomain, theta_star: &[f64]) -> Result<Matrix> {
    if theta_star.len() != domain.dim() {
        return Err(SurroError::DimensionMismatch {
            expected: domain.dim(),
            got: theta_star.len(),
        });
    }
    if !domain.contains(theta_star) {
        return Err(SurroError::InfeasibleInput(
            "θ⋆ is outside the domain".into(),
        ));
    }
    domain.direction_basis()
}

/// Samples `samples` random directions and checks `vᵀÃv > |vᵀB̃v|`.
pub fn h4_audit(a: &SymMatrix, b: &SymMatrix, samples: usize, rng: &mut SurroRng) -> bool {
    let d = a.dim();
    (0..samples).all(|_| {
        let v = rng::unit_vector(rng, d);
        a.quad_form(&v) > b.quad_form(&v).abs()
    })
}

/// Curvature at `θ⋆`, using the problem's analytic second derivatives where
/// present and central differences of `∂₂Q` along `V` otherwise.
pub fn curvature_at(problem: &dyn Surrogate, theta_star: &[f64], fd: &FdSpec) -> Result<CurvatureFrame> {
    build_frame(problem, theta_star, fd, true)
}

/// Curvature at `θ⋆` by finite differences only.
pub fn curvature_fd(problem: &dyn Surrogate, theta_star: &[f64], fd: &FdSpec) -> Result<CurvatureFrame> {
    build_frame(problem, theta_star, fd, false)
}

fn build_frame(
    problem: &dyn Surrogate,
    theta_star: &[f64],
    fd: &FdSpec,
    allow_analytic: bool,
) -> Result<CurvatureFrame> {
    fd.validate()?;
    let p = direction_basis(problem.domain(), theta_star)?;
    let analytic_a = if allow_analytic {
        problem.hess22(theta_star, theta_star).transpose()?
    } else {
        None
    };
    let analytic_b = if allow_analytic {
        problem.hess12(theta_star, theta_star).transpose()?
    } else {
        None
    };
    let h = fd.step * (1.0 + linalg::norm2(theta_star));
    let (has_a, has_b) = (analytic_a.is_some(), analytic_b.is_some());

    let (a_star, a_tilde) = match analytic_a {
        Some(a) => {
            let at = a.congruence(&p);
            (a, at)
        }
        None => {
            let at = fd_reduced(problem, theta_star, &p, h, fd.richardson, Slot::Second)?;
            (lift(&at, &p), at)
        }
    };
    let (b_star, b_tilde, asymmetry) = match analytic_b {
        Some(m) => {
            let (b, asym) = SymMatrix::with_asymmetry(m.scale(-1.0));
            let bt = b.congruence(&p);
            (b, bt, asym)
        }
        None => {
            let raw = fd_reduced_raw(problem, theta_star, &p, h, fd.richardson, Slot::First)?;
            let (bt, asym) = SymMatrix::with_asymmetry(raw.scale(-1.0));
            (lift(&bt, &p), bt, asym)
        }
    };
    let source = match (has_a, has_b) {
        (true, true) => CurvatureSource::Analytic,
        (false, false) => CurvatureSource::FiniteDifference,
        _ => CurvatureSource::Mixed,
    };
    let h4_pass = h4_audit(&a_tilde, &b_tilde, H4_SAMPLES, &mut rng::seeded(H4_SEED, 0));
    Ok(CurvatureFrame {
        a_star,
        b_star,
        p,
        a_tilde,
        b_tilde,
        asymmetry_diag: asymmetry,
        h4_pass,
        source,
    })
}

#[derive(Clone, Copy)]
enum Slot {
    /// Differentiate `∂₂Q` in `θ` (gives `∂₁₂Q`).
    First,
    /// Differentiate `∂₂Q` in `θ′` (gives `∂₂₂Q`).
    Second,
}

/// `P X̃ Pᵀ`.
fn lift(x: &SymMatrix, p: &Matrix) -> SymMatrix {
    SymMatrix::new(p.matmul(x.as_matrix()).matmul(&p.transpose()))
}

fn fd_reduced(
    problem: &dyn Surrogate,
    theta: &[f64],
    p: &Matrix,
    h: f64,
    richardson: bool,
    slot: Slot,
) -> Result<SymMatrix> {
    Ok(SymMatrix::new(fd_reduced_raw(problem, theta, p, h, richardson, slot)?))
}

/// `Pᵀ · D · P` where column `j` of `D·P` is the central difference of
/// `∂₂Q` along `p_j` in the chosen slot.
fn fd_reduced_raw(
    problem: &dyn Surrogate,
    theta: &[f64],
    p: &Matrix,
    h: f64,
    richardson: bool,
    slot: Slot,
) -> Result<Matrix> {
    let d = p.cols();
    let pt = p.transpose();
    let mut cols = Vec::with_capacity(d);
    for j in 0..d {
        let dir = p.column(j);
        let diff = |step: f64| -> Result<Vec<f64>> {
            let plus = linalg::axpy(theta, step, &dir);
            let minus = linalg::axpy(theta, -step, &dir);
            let (gp, gm) = match slot {
                Slot::First => (eval(problem, &plus, theta)?, eval(problem, &minus, theta)?),
                Slot::Second => (eval(problem, theta, &plus)?, eval(problem, theta, &minus)?),
            };
            Ok(linalg::scale(&linalg::sub(&gp, &gm), 0.5 / step))
        };
        let coarse = diff(h)?;
        let col = if richardson {
            let fine = diff(0.5 * h)?;
            fine.iter()
                .zip(&coarse)
                .map(|(f, c)| (4.0 * f - c) / 3.0)
                .collect()
        } else {
            coarse
        };
        cols.push(pt.matvec(&col));
    }
    Ok(Matrix::from_columns(&cols))
}

fn eval(problem: &dyn Surrogate, theta: &[f64], theta_next: &[f64]) -> Result<Vec<f64>> {
    match problem.grad2(theta, theta_next) {
        Ok(g) if g.iter().all(|v| v.is_finite()) => Ok(g),
        Ok(_) | Err(SurroError::OutsideMirrorDomain) => Err(SurroError::InfeasiblePerturbation),
        Err(e) => Err(e),
    }
}

/// `(ρ̲⋆, ρ̄⋆)` from the reduced curvature.
pub fn theoretical_rates(frame: &CurvatureFrame) -> Result<RatePair> {
    if let Err(SurroError::NotPositiveDefinite { min_eigenvalue }) =
        linalg::positive_definite_spectrum(&frame.a_tilde)
    {
        return Err(SurroError::H4Violated { min_eigenvalue });
    }
    linalg::generalized_rate_pair(&frame.a_tilde, &frame.b_tilde)
}
