//! Bregman divergences and Bregman projections.

use crate::error::{Result, SurroError};
use crate::linalg;
use crate::models::MirrorMap;
use crate::surrogate::solver::{numeric_minimize, InnerOptions};
use crate::surrogate::{ConvexDomain, FnSurrogate, ParamVector};

/// `D_Φ(x, y) = Φ(x) − Φ(y) − ∂Φ(y)ᵀ(x − y)`.
pub fn bregman(phi: &MirrorMap, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(SurroError::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if let MirrorMap::NegEntropy = phi {
        phi.value(x)?;
        phi.value(y)?;
        // Σ x log(x/y) − x + y, written to avoid cancellation.
        return Ok(x
            .iter()
            .zip(y)
            .map(|(&a, &b)| a * (a / b).ln() - a + b)
            .sum());
    }
    let gy = phi.grad(y)?;
    Ok(phi.value(x)? - phi.value(y)? - linalg::dot(&gy, &linalg::sub(x, y)))
}

/// `argmin_{θ ∈ C ∩ D} D_Φ(θ, ζ)`.
///
/// Closed forms: Euclidean projection for the quadratic map and
/// normalization for the entropy on a simplex without a face margin.
/// Everything else goes through the numeric inner solver.
pub fn bregman_project(
    domain: &ConvexDomain,
    phi: &MirrorMap,
    zeta: &[f64],
) -> Result<ParamVector> {
    if zeta.len() != domain.dim() {
        return Err(SurroError::DimensionMismatch {
            expected: domain.dim(),
            got: zeta.len(),
        });
    }
    if !phi.in_domain(zeta) {
        return Err(SurroError::OutsideMirrorDomain);
    }
    match (phi, domain) {
        (MirrorMap::Quadratic, _) => return Ok(ParamVector::from(domain.project(zeta))),
        (MirrorMap::NegEntropy, ConvexDomain::Simplex { face_eps, .. }) => {
            let s: f64 = zeta.iter().sum();
            let x: Vec<f64> = zeta.iter().map(|v| v / s).collect();
            if x.iter().all(|&v| v >= *face_eps) {
                return Ok(ParamVector::from(x));
            }
        }
        _ => {}
    }
    if domain.contains(zeta) {
        return Ok(ParamVector::from(zeta.to_vec()));
    }

    let phi_c = *phi;
    let phi_g = *phi;
    let phi_h = *phi;
    let z1 = zeta.to_vec();
    let grad_zeta = phi.grad(zeta)?;
    let problem = FnSurrogate::new(
        "bregman-projection",
        domain.clone(),
        move |_, x| bregman(&phi_c, x, &z1),
        move |_, x| Ok(linalg::sub(&phi_g.grad(x)?, &grad_zeta)),
    )
    .with_hess22(move |_, x| phi_h.hess(x));
    let start = domain.project(zeta);
    if !phi.in_domain(&start) {
        return Err(SurroError::ProjectionFailed(
            "Euclidean projection of ζ leaves the mirror-map domain".into(),
        ));
    }
    numeric_minimize(&problem, zeta, &start, &InnerOptions::numeric())
        .map(ParamVector::from)
        .map_err(|e| SurroError::ProjectionFailed(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_divergence_is_half_squared_distance() {
        let d = bregman(&MirrorMap::Quadratic, &[1.0, 0.0], &[0.0, 0.0]).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
        let d = bregman(&MirrorMap::Quadratic, &[0.3, -2.0], &[0.3, -2.0]).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn entropy_divergence_is_kl() {
        let d = bregman(&MirrorMap::NegEntropy, &[0.5, 0.5], &[0.25, 0.75]).unwrap();
        let kl = 0.5 * (2.0f64).ln() + 0.5 * (2.0f64 / 3.0).ln();
        assert!((d - kl).abs() < 1e-15);
        assert!((d - 0.14384).abs() < 1e-5);
        assert!(bregman(&MirrorMap::NegEntropy, &[0.5, 0.5], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn ball_divergence_vanishes_on_diagonal() {
        let phi = MirrorMap::ball(2.0).unwrap();
        let d = bregman(&phi, &[0.4, 0.3], &[0.4, 0.3]).unwrap();
        assert!(d.abs() < 1e-15);
        assert!(bregman(&phi, &[0.4, 0.3], &[-0.2, 0.1]).unwrap() > 0.0);
    }

    #[test]
    fn projection_examples() {
        let bx = ConvexDomain::box_(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let p = bregman_project(&bx, &MirrorMap::Quadratic, &[2.0, 0.5]).unwrap();
        assert_eq!(p.coords(), &[1.0, 0.5]);
        let p = bregman_project(&bx, &MirrorMap::Quadratic, &[0.2, 0.5]).unwrap();
        assert_eq!(p.coords(), &[0.2, 0.5]);

        let simplex = ConvexDomain::simplex(2, 0.0).unwrap();
        let p = bregman_project(&simplex, &MirrorMap::NegEntropy, &[0.2, 0.6]).unwrap();
        assert!((p[0] - 0.25).abs() < 1e-15 && (p[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn entropy_projection_beats_simplex_grid() {
        let simplex = ConvexDomain::simplex(2, 0.0).unwrap();
        let zeta = [0.2, 0.6];
        let p = bregman_project(&simplex, &MirrorMap::NegEntropy, &zeta).unwrap();
        let best = bregman(&MirrorMap::NegEntropy, &p, &zeta).unwrap();
        let n = 10_000;
        for i in 1..n {
            let t = i as f64 / n as f64;
            let d = bregman(&MirrorMap::NegEntropy, &[t, 1.0 - t], &zeta).unwrap();
            assert!(d >= best - 1e-14);
        }
    }

    #[test]
    fn ball_map_projection_onto_centered_ball_is_radial() {
        // Φ is radial, so the projection of ζ onto a centred ball is the
        // radial clip.
        let phi = MirrorMap::ball(2.0).unwrap();
        let dom = ConvexDomain::ball(vec![0.0, 0.0], 1.0, false).unwrap();
        let zeta = [1.1, 0.4];
        let p = bregman_project(&dom, &phi, &zeta).unwrap();
        let n = linalg::norm2(&zeta);
        assert!((p[0] - zeta[0] / n).abs() < 1e-7, "{p:?}");
        assert!((p[1] - zeta[1] / n).abs() < 1e-7, "{p:?}");
    }
}
