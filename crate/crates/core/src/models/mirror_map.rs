use crate::error::{Result, SurroError};
use crate::linalg::{self, Matrix, SymMatrix};
use crate::surrogate::domain::INTERIOR_MARGIN;
use crate::surrogate::ConvexDomain;

/// Mirror map `Φ` inducing the Bregman divergence `D_Φ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MirrorMap {
    /// `Φ(x) = ½‖x‖²` on `R^q`.
    Quadratic,
    /// `Φ(x) = Σ x_i log x_i` on the open positive orthant.
    NegEntropy,
    /// `Φ(x) = ‖x‖² / (R′ − ‖x‖²)` on the open ball `‖x‖² < R′`.
    Ball { r_prime: f64 },
}

impl MirrorMap {
    pub fn ball(r_prime: f64) -> Result<Self> {
        if !(r_prime > 0.0 && r_prime.is_finite()) {
            return Err(SurroError::InvalidArgument(format!(
                "ball mirror map needs R' > 0, got {r_prime}"
            )));
        }
        Ok(Self::Ball { r_prime })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Quadratic => "quadratic",
            Self::NegEntropy => "neg_entropy",
            Self::Ball { .. } => "ball",
        }
    }

    /// Membership in the open domain `D` of `Φ`.
    pub fn in_domain(&self, x: &[f64]) -> bool {
        if x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self {
            Self::Quadratic => true,
            Self::NegEntropy => x.iter().all(|&v| v > 0.0),
            Self::Ball { r_prime } => linalg::dot(x, x) < *r_prime,
        }
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if self.in_domain(x) {
            Ok(())
        } else {
            Err(SurroError::OutsideMirrorDomain)
        }
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        Ok(match self {
            Self::Quadratic => 0.5 * linalg::dot(x, x),
            Self::NegEntropy => x.iter().map(|&v| v * v.ln()).sum(),
            Self::Ball { r_prime } => {
                let s = linalg::dot(x, x);
                s / (r_prime - s)
            }
        })
    }

    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        Ok(match self {
            Self::Quadratic => x.to_vec(),
            Self::NegEntropy => x.iter().map(|&v| 1.0 + v.ln()).collect(),
            Self::Ball { r_prime } => {
                let gap = r_prime - linalg::dot(x, x);
                linalg::scale(x, 2.0 * r_prime / (gap * gap))
            }
        })
    }

    pub fn hess(&self, x: &[f64]) -> Result<SymMatrix> {
        self.check(x)?;
        let q = x.len();
        Ok(match self {
            Self::Quadratic => SymMatrix::identity(q),
            Self::NegEntropy => {
                SymMatrix::from_diag(&x.iter().map(|&v| 1.0 / v).collect::<Vec<_>>())
            }
            Self::Ball { r_prime } => {
                let gap = r_prime - linalg::dot(x, x);
                let mut m = Matrix::identity(q).scale(2.0 * r_prime / (gap * gap));
                let c = 8.0 * r_prime / (gap * gap * gap);
                for i in 0..q {
                    for j in 0..q {
                        m[(i, j)] += c * x[i] * x[j];
                    }
                }
                SymMatrix::new(m)
            }
        })
    }

    /// Lower bound on `λ_min(∂²Φ)` over the domain `C` (strong-convexity
    /// modulus), when one is available in closed form.
    pub fn strong_convexity_on(&self, domain: &ConvexDomain) -> Option<f64> {
        match (self, domain) {
            (Self::Quadratic, _) => Some(1.0),
            // ∂²Φ = diag(1/x) and x_i ≤ 1 on the simplex.
            (Self::NegEntropy, ConvexDomain::Simplex { .. }) => Some(1.0),
            (Self::NegEntropy, ConvexDomain::Box { upper, .. }) => {
                let m = upper.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                m.is_finite().then(|| 1.0 / m)
            }
            // Minimized at x = 0: 2R′/R′².
            (Self::Ball { r_prime }, _) => Some(2.0 / r_prime),
            _ => None,
        }
    }

    /// Checks `C ⊆ D` for the pairs this crate supports: any domain for the
    /// quadratic map; simplices and positive boxes for the entropy; bounded
    /// sets strictly inside the open ball for the ball map.
    pub fn check_domain(&self, domain: &ConvexDomain) -> Result<()> {
        let incompatible = |why: &str| Err(SurroError::IncompatibleDomain(why.to_string()));
        match self {
            Self::Quadratic => Ok(()),
            Self::NegEntropy => match domain {
                ConvexDomain::Simplex { .. } => Ok(()),
                ConvexDomain::Box { lower, .. } if lower.iter().all(|&l| l > 0.0) => Ok(()),
                _ => incompatible("negative entropy needs a simplex or a box with positive lower bounds"),
            },
            Self::Ball { r_prime } => {
                let limit = r_prime.sqrt() * (1.0 - INTERIOR_MARGIN);
                let reach = match domain {
                    ConvexDomain::EuclideanBall { center, radius, .. } => {
                        linalg::norm2(center) + radius
                    }
                    ConvexDomain::Box { lower, upper } => lower
                        .iter()
                        .zip(upper)
                        .map(|(l, u)| l.abs().max(u.abs()).powi(2))
                        .sum::<f64>()
                        .sqrt(),
                    ConvexDomain::Simplex { .. } => 1.0,
                    ConvexDomain::AffineSlice { lower, upper, .. } => lower
                        .iter()
                        .zip(upper)
                        .map(|(l, u)| l.abs().max(u.abs()).powi(2))
                        .sum::<f64>()
                        .sqrt(),
                    ConvexDomain::FullSpace { .. } => f64::INFINITY,
                };
                if reach < limit {
                    Ok(())
                } else {
                    incompatible("domain is not contained in the open ball of the mirror map")
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn fd_grad(phi: &MirrorMap, x: &[f64]) -> Vec<f64> {
        let h = 1e-6;
        (0..x.len())
            .map(|i| {
                let mut p = x.to_vec();
                let mut m = x.to_vec();
                p[i] += h;
                m[i] -= h;
                (phi.value(&p).unwrap() - phi.value(&m).unwrap()) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn gradients_match_finite_differences_and_hessians_are_pd() {
        let mut r = rng::seeded(11, 0);
        let simplex = ConvexDomain::simplex(3, 0.0).unwrap();
        let ball = ConvexDomain::ball(vec![0.0; 3], 1.0, false).unwrap();
        let cases = [
            (MirrorMap::Quadratic, ball.clone()),
            (MirrorMap::NegEntropy, simplex),
            (MirrorMap::ball(2.0).unwrap(), ball),
        ];
        for (phi, dom) in &cases {
            for _ in 0..100 {
                let x = dom.sample(&mut r);
                if matches!(phi, MirrorMap::NegEntropy) && x.iter().any(|&v| v < 1e-3) {
                    continue;
                }
                let g = phi.grad(&x).unwrap();
                let fd = fd_grad(phi, &x);
                for (a, b) in g.iter().zip(&fd) {
                    assert!((a - b).abs() <= 1e-6 * (1.0 + a.abs()), "{phi:?} {a} {b}");
                }
                assert!(linalg::positive_definite_spectrum(&phi.hess(&x).unwrap()).is_ok());
            }
        }
    }

    #[test]
    fn ball_map_gradient_diverges_at_boundary() {
        let r_prime = 2.0;
        let phi = MirrorMap::ball(r_prime).unwrap();
        let radius = f64::sqrt(r_prime) - 1e-6 * r_prime;
        let x = [radius, 0.0];
        let g = phi.grad(&x).unwrap();
        assert!(linalg::norm2(&g) > 1e6);
        assert!(phi.value(&[2.0, 0.0]).is_err());
    }

    #[test]
    fn domain_compatibility() {
        let phi = MirrorMap::ball(2.0).unwrap();
        assert!(phi
            .check_domain(&ConvexDomain::ball(vec![0.0; 2], 1.0, false).unwrap())
            .is_ok());
        assert!(phi
            .check_domain(&ConvexDomain::ball(vec![0.0; 2], 1.5, false).unwrap())
            .is_err());
        assert!(MirrorMap::NegEntropy
            .check_domain(&ConvexDomain::full_space(2).unwrap())
            .is_err());
    }
}
