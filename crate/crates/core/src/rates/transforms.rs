//! Spectrum maps relating rates of related algorithms, and the
//! extrapolation step built from the curvature.

use crate::error::{Result, SurroError};
use crate::linalg::{self, Matrix, RatePair, SymMatrix};
use crate::rates::curvature::{curvature_at, CurvatureFrame, FdSpec};
use crate::surrogate::{fixed_point_residual, iterate, ParamVector, StopRule, Surrogate};

/// Spectrum of `Ã⁻¹B̃` via the similar symmetric matrix `Ã^{−1/2}B̃Ã^{−1/2}`.
pub fn rate_spectrum(frame: &CurvatureFrame) -> Result<Vec<f64>> {
    let w = linalg::whitened(&frame.a_tilde, &frame.b_tilde).map_err(|e| match e {
        SurroError::NotPositiveDefinite { min_eigenvalue } => {
            SurroError::H4Violated { min_eigenvalue }
        }
        e => e,
    })?;
    Ok(linalg::eigh(&w)?.values)
}

/// `x ↦ x² − x + 1`, the map taking a mirror-descent rate eigenvalue to
/// the mirror-prox one. Its minimum over `R` is `3/4` at `x = 1/2`.
pub fn prox_map(x: f64) -> f64 {
    x * x - x + 1.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProxPrediction {
    pub md_spectrum: Vec<f64>,
    pub mapped: Vec<f64>,
    pub rates: RatePair,
    /// Some mapped eigenvalue has modulus `≥ 1` (a descent eigenvalue
    /// outside `(0, 1)`).
    pub not_contracting: bool,
}

/// Predicted mirror-prox rates from the mirror-descent curvature.
pub fn mirror_prox_spectrum_map(md_frame: &CurvatureFrame) -> Result<ProxPrediction> {
    let md_spectrum = rate_spectrum(md_frame)?;
    let mapped: Vec<f64> = md_spectrum.iter().map(|&x| prox_map(x)).collect();
    let sup = mapped.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let inf = mapped.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()));
    Ok(ProxPrediction {
        not_contracting: sup >= 1.0,
        md_spectrum,
        mapped,
        rates: RatePair::new(inf, sup),
    })
}

/// `‖(Ã^m)⁻¹B̃^m − ((Ã⁻¹B̃)² − Ã⁻¹B̃ + I)‖_max` between a mirror-prox frame
/// and the frame of the matching mirror descent.
pub fn prox_identity_deviation(md_frame: &CurvatureFrame, prox_frame: &CurvatureFrame) -> Result<f64> {
    if md_frame.reduced_dim() != prox_frame.reduced_dim() {
        return Err(SurroError::DimensionMismatch {
            expected: md_frame.reduced_dim(),
            got: prox_frame.reduced_dim(),
        });
    }
    let m = md_frame.rate_matrix()?;
    let predicted = m.matmul(&m).sub(&m).add(&Matrix::identity(m.rows()));
    Ok(prox_frame.rate_matrix()?.sub(&predicted).max_abs())
}

/// `g_α(x) = (x − α)/(1 − α)`.
pub fn g_alpha(x: f64, alpha: f64) -> f64 {
    (x - alpha) / (1.0 - alpha)
}

/// Predicted `ρ̄⋆` of α-EM from the classical EM rates.
pub fn alpha_transform(em_rates: &RatePair, alpha: f64) -> Result<f64> {
    if alpha == 1.0 || !alpha.is_finite() {
        return Err(SurroError::InvalidArgument(format!(
            "alpha must be finite and different from 1, got {alpha}"
        )));
    }
    Ok(g_alpha(em_rates.rho_inf, alpha)
        .abs()
        .max(g_alpha(em_rates.rho_sup, alpha).abs()))
}

/// `(α_opt, ρ_opt) = ((ρ̄ + ρ̲)/2, (ρ̄ − ρ̲)/(2 − ρ̄ − ρ̲))`.
pub fn optimal_alpha(em_rates: &RatePair) -> (f64, f64) {
    let (lo, hi) = (em_rates.rho_inf, em_rates.rho_sup);
    ((lo + hi) / 2.0, (hi - lo) / (2.0 - hi - lo))
}

/// Extrapolates `θ_n + P(I − Ã⁻¹B̃)⁻¹Pᵀ(θ_{n+1} − θ_n)`; exact for affine
/// iterations whose linear part is `Ã⁻¹B̃`.
pub fn accelerate(theta_n: &[f64], theta_next: &[f64], frame: &CurvatureFrame) -> Result<ParamVector> {
    let q = frame.p.rows();
    for v in [theta_n, theta_next] {
        if v.len() != q {
            return Err(SurroError::DimensionMismatch {
                expected: q,
                got: v.len(),
            });
        }
    }
    let y = frame.p.transpose().matvec(&linalg::sub(theta_next, theta_n));
    // (I − Ã⁻¹B̃)⁻¹y = (Ã − B̃)⁻¹Ãy.
    let rhs = frame.a_tilde.as_matrix().matvec(&y);
    let gap: SymMatrix = frame.a_tilde.sub(&frame.b_tilde);
    let z = linalg::solve_symmetric(&gap, &rhs).map_err(|_| SurroError::SingularAcceleration)?;
    let out = linalg::add(theta_n, &frame.p.matvec(&z));
    ParamVector::new(out).map_err(|_| SurroError::SingularAcceleration)
}

/// [`accelerate`] with the curvature evaluated at `θ_n`.
pub fn accelerate_at(
    problem: &dyn Surrogate,
    theta_n: &[f64],
    theta_next: &[f64],
    fd: &FdSpec,
) -> Result<ParamVector> {
    let frame = curvature_at(problem, theta_n, fd)?;
    accelerate(theta_n, theta_next, &frame)
}

/// Fixed point located by iterating from `theta0`, then refined with one
/// [`accelerate`] call on the last two iterates. The refinement is kept
/// only when it lowers the fixed-point residual.
pub fn estimate_theta_star(
    problem: &dyn Surrogate,
    theta0: &ParamVector,
    stop: &StopRule,
    fd: &FdSpec,
) -> Result<ParamVector> {
    let trace = iterate(problem, theta0, stop)?;
    let last = trace.last().clone();
    let n = trace.len();
    if n < 2 {
        return Ok(last);
    }
    let prev = &trace.iterates[n - 2];
    let candidate = match accelerate_at(problem, prev, &last, fd) {
        Ok(c) if problem.domain().contains(&c) => c,
        _ => return Ok(last),
    };
    let base = fixed_point_residual(problem, &last)?;
    match fixed_point_residual(problem, &candidate) {
        Ok(r) if r < base => Ok(candidate),
        _ => Ok(last),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{
        em_population_problem, gradient_descent_problem, mirror_descent_problem,
        mirror_prox_problem, GaussianLatentModel, MirrorMap, Objective,
    };
    use crate::rates::curvature::curvature_fd;
    use crate::surrogate::{inner_minimize, ConvexDomain};

    fn frame_from_spectrum(values: &[f64]) -> CurvatureFrame {
        CurvatureFrame::from_full(
            SymMatrix::identity(values.len()),
            SymMatrix::from_diag(values),
            Matrix::identity(values.len()),
        )
    }

    #[test]
    fn prox_map_examples() {
        let p = mirror_prox_spectrum_map(&frame_from_spectrum(&[0.5])).unwrap();
        assert_eq!(p.rates.rho_sup, 0.75);
        let p = mirror_prox_spectrum_map(&frame_from_spectrum(&[0.2, 0.6])).unwrap();
        assert!((p.rates.rho_inf - 0.76).abs() < 1e-15 && (p.rates.rho_sup - 0.84).abs() < 1e-15);
        assert!(!p.not_contracting);
        let p = mirror_prox_spectrum_map(&frame_from_spectrum(&[-0.1, 0.3])).unwrap();
        assert!((p.rates.rho_sup - 1.11).abs() < 1e-12);
        assert!(p.not_contracting);
    }

    #[test]
    fn alpha_transform_examples() {
        let r = RatePair::new(0.5, 0.5);
        assert_eq!(alpha_transform(&r, 0.0).unwrap(), 0.5);
        assert_eq!(optimal_alpha(&r), (0.5, 0.0));
        let r = RatePair::new(0.3, 0.5);
        let (a, rho) = optimal_alpha(&r);
        assert!((a - 0.4).abs() < 1e-15 && (rho - 0.2 / 1.2).abs() < 1e-15);
        // Grid scan of max|g_α| over the interval endpoints.
        let (mut best_a, mut best) = (0.0, f64::INFINITY);
        for i in 0..=10_000 {
            let a = -1.0 + 1.9 * i as f64 / 10_000.0;
            let v = alpha_transform(&r, a).unwrap();
            if v < best {
                best = v;
                best_a = a;
            }
        }
        assert!((best_a - 0.4).abs() < 1e-3 && (best - rho).abs() < 1e-3);
        assert!(alpha_transform(&r, 1.0).is_err());
    }

    #[test]
    fn acceleration_is_exact_on_affine_maps() {
        let m = GaussianLatentModel::new(1.0, 1.0, 0.7).unwrap();
        let p = em_population_problem(m);
        let tn = [0.8];
        let next = inner_minimize(&p, &ParamVector::from(tn.to_vec())).unwrap();
        assert!((next[0] - 0.75).abs() < 1e-15);
        let acc = accelerate_at(&p, &tn, &next, &FdSpec::default()).unwrap();
        assert!((acc[0] - 0.7).abs() <= 1e-12);

        let f = Objective::quadratic(
            SymMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]),
            vec![0.3, -0.2],
        )
        .unwrap();
        let p = gradient_descent_problem(f, 0.3, ConvexDomain::full_space(2).unwrap()).unwrap();
        let t0 = [4.0, -3.0];
        let t1 = inner_minimize(&p, &ParamVector::from(t0.to_vec())).unwrap();
        let acc = accelerate_at(&p, &t0, &t1, &FdSpec::default()).unwrap();
        assert!(linalg::dist2(&acc, &[0.3, -0.2]) < 1e-12);
    }

    #[test]
    fn estimated_fixed_point_of_population_em() {
        let m = GaussianLatentModel::new(1.0, 1.0, 0.7).unwrap();
        let p = em_population_problem(m);
        let t = estimate_theta_star(&p, &ParamVector::scalar(3.0), &StopRule::default(), &FdSpec::default())
            .unwrap();
        assert!((t[0] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn singular_acceleration() {
        let frame = frame_from_spectrum(&[1.0, 0.5]);
        assert_eq!(
            accelerate(&[0.0, 0.0], &[1.0, 1.0], &frame).unwrap_err(),
            SurroError::SingularAcceleration
        );
    }

    #[test]
    fn prox_identity_on_quadratic_and_entropy_setups() {
        let f = Objective::quadratic_at_origin(SymMatrix::from_diag(&[1.0, 2.5])).unwrap();
        let dom = ConvexDomain::full_space(2).unwrap();
        let md = mirror_descent_problem(f.clone(), MirrorMap::Quadratic, 0.2, dom.clone()).unwrap();
        let mp = mirror_prox_problem(f, MirrorMap::Quadratic, 0.2, dom).unwrap();
        let fd = FdSpec::default();
        let md_frame = curvature_at(&md, &[0.0, 0.0], &fd).unwrap();
        let mp_frame = curvature_fd(&mp, &[0.0, 0.0], &fd).unwrap();
        assert!(prox_identity_deviation(&md_frame, &mp_frame).unwrap() < 1e-6);

        let c = vec![0.2, 0.3, 0.5];
        let f = Objective::quadratic(SymMatrix::identity(3), c.clone()).unwrap();
        let dom = ConvexDomain::simplex(3, 0.0).unwrap();
        let md = mirror_descent_problem(f.clone(), MirrorMap::NegEntropy, 0.1, dom.clone()).unwrap();
        let mp = mirror_prox_problem(f, MirrorMap::NegEntropy, 0.1, dom).unwrap();
        let md_frame = curvature_at(&md, &c, &fd).unwrap();
        let mp_frame = curvature_fd(&mp, &c, &fd).unwrap();
        assert!(prox_identity_deviation(&md_frame, &mp_frame).unwrap() < 1e-6);
    }
}
