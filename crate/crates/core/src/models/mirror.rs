//! Mirror descent and mirror prox written as surrogate minimization.

use std::sync::Mutex;

use crate::error::{Result, SurroError};
use crate::linalg::{self, Matrix, SymMatrix};
use crate::models::{MirrorMap, Objective};
use crate::surrogate::{bregman, bregman_project, ConvexDomain, Surrogate};

/// Shared pieces of the two mirror methods.
#[derive(Debug, Clone)]
struct MirrorSetup {
    f: Objective,
    phi: MirrorMap,
    eta: f64,
    domain: ConvexDomain,
    gamma: Option<f64>,
    beta: Option<f64>,
}

impl MirrorSetup {
    fn new(f: Objective, phi: MirrorMap, eta: f64, domain: ConvexDomain) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(SurroError::InvalidArgument(format!(
                "step size must be positive, got {eta}"
            )));
        }
        if f.dim() != domain.dim() {
            return Err(SurroError::DimensionMismatch {
                expected: domain.dim(),
                got: f.dim(),
            });
        }
        phi.check_domain(&domain)?;
        let gamma = phi.strong_convexity_on(&domain);
        let beta = f.beta();
        Ok(Self {
            f,
            phi,
            eta,
            domain,
            gamma,
            beta,
        })
    }

    fn check_pair(&self, theta: &[f64], theta_next: &[f64]) -> Result<()> {
        let q = self.domain.dim();
        for v in [theta, theta_next] {
            if v.len() != q {
                return Err(SurroError::DimensionMismatch {
                    expected: q,
                    got: v.len(),
                });
            }
        }
        Ok(())
    }

    /// `η gᵀθ′ + D_Φ(θ′, θ)`.
    fn value_with(&self, g: &[f64], theta: &[f64], theta_next: &[f64]) -> Result<f64> {
        self.check_pair(theta, theta_next)?;
        Ok(self.eta * linalg::dot(g, theta_next) + bregman(&self.phi, theta_next, theta)?)
    }

    fn grad2_with(&self, g: &[f64], theta: &[f64], theta_next: &[f64]) -> Result<Vec<f64>> {
        self.check_pair(theta, theta_next)?;
        let d = linalg::sub(&self.phi.grad(theta_next)?, &self.phi.grad(theta)?);
        Ok(linalg::axpy(&d, self.eta, g))
    }

    /// `argmin_{θ′ ∈ C} η gᵀθ′ + D_Φ(θ′, θ)`: a step in the dual followed by
    /// a Bregman projection.
    fn step_with(&self, g: &[f64], theta: &[f64]) -> Result<Vec<f64>> {
        let eta = self.eta;
        match (&self.phi, &self.domain) {
            (MirrorMap::Quadratic, _) => Ok(self.domain.project(&linalg::axpy(theta, -eta, g))),
            (MirrorMap::NegEntropy, ConvexDomain::Simplex { face_eps, .. }) if *face_eps == 0.0 => {
                // Multiplicative weights, shifted by min g for stability.
                let gmin = g.iter().cloned().fold(f64::INFINITY, f64::min);
                let w: Vec<f64> = theta
                    .iter()
                    .zip(g)
                    .map(|(t, gi)| t * (-eta * (gi - gmin)).exp())
                    .collect();
                let s: f64 = w.iter().sum();
                Ok(w.into_iter().map(|v| v / s).collect())
            }
            _ => {
                let dual = linalg::axpy(&self.phi.grad(theta)?, -eta, g);
                let zeta = inverse_mirror_gradient(&self.phi, &dual)?;
                bregman_project(&self.domain, &self.phi, &zeta).map(|p| p.into_inner())
            }
        }
    }

    fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        match (self.gamma, self.beta) {
            (Some(g), Some(b)) if b > 0.0 => {
                if self.eta >= g / b {
                    w.push(format!(
                        "step size {} is not below gamma/beta = {}; global convergence is not guaranteed",
                        self.eta,
                        g / b
                    ));
                }
            }
            _ => w.push(
                "strong-convexity or smoothness constant unavailable; step-size condition not checked"
                    .to_string(),
            ),
        }
        w
    }
}

/// `(∂Φ)⁻¹(y)`.
pub fn inverse_mirror_gradient(phi: &MirrorMap, y: &[f64]) -> Result<Vec<f64>> {
    match phi {
        MirrorMap::Quadratic => Ok(y.to_vec()),
        MirrorMap::NegEntropy => Ok(y.iter().map(|v| (v - 1.0).exp()).collect()),
        MirrorMap::Ball { r_prime } => {
            // ∂Φ(x) = 2R′x/(R′ − ‖x‖²)²: x is parallel to y with a radius r
            // solving the increasing scalar equation below.
            let t = linalg::norm2(y);
            if t == 0.0 {
                return Ok(vec![0.0; y.len()]);
            }
            let rp = *r_prime;
            let g = |r: f64| 2.0 * rp * r / (rp - r * r).powi(2);
            let (mut lo, mut hi) = (0.0, rp.sqrt());
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid == lo || mid == hi {
                    break;
                }
                if g(mid) < t {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let r = 0.5 * (lo + hi);
            if r * r >= rp {
                return Err(SurroError::OutsideMirrorDomain);
            }
            Ok(linalg::scale(y, r / t))
        }
    }
}

/// Mirror descent: `Q_θ(θ′) = η ∂f(θ)ᵀθ′ + D_Φ(θ′, θ)`.
#[derive(Debug, Clone)]
pub struct MirrorDescent {
    setup: MirrorSetup,
    label: String,
}

impl MirrorDescent {
    pub fn new(f: Objective, phi: MirrorMap, eta: f64, domain: ConvexDomain) -> Result<Self> {
        let label = format!("mirror_descent[{}, {}]", phi.name(), f.name());
        Ok(Self {
            setup: MirrorSetup::new(f, phi, eta, domain)?,
            label,
        })
    }

    pub fn eta(&self) -> f64 {
        self.setup.eta
    }

    pub fn objective(&self) -> &Objective {
        &self.setup.f
    }

    pub fn mirror_map(&self) -> MirrorMap {
        self.setup.phi
    }

    /// Strong-convexity modulus of `Φ` on the domain and smoothness of `f`.
    pub fn constants(&self) -> (Option<f64>, Option<f64>) {
        (self.setup.gamma, self.setup.beta)
    }

    pub fn warnings(&self) -> Vec<String> {
        self.setup.warnings()
    }

    /// Analytic `(A⋆, B⋆) = (∂²Φ(θ⋆), ∂²Φ(θ⋆) − η∂²f(θ⋆))`.
    pub fn analytic_curvature(&self, theta_star: &[f64]) -> Result<(SymMatrix, SymMatrix)> {
        let a = self.setup.phi.hess(theta_star)?;
        let b = a.sub(&self.setup.f.hess(theta_star)?.scale(self.setup.eta));
        Ok((a, b))
    }
}

impl Surrogate for MirrorDescent {
    fn label(&self) -> &str {
        &self.label
    }

    fn domain(&self) -> &ConvexDomain {
        &self.setup.domain
    }

    fn value(&self, theta: &[f64], theta_next: &[f64]) -> Result<f64> {
        let g = self.setup.f.grad(theta)?;
        self.setup.value_with(&g, theta, theta_next)
    }

    fn grad2(&self, theta: &[f64], theta_next: &[f64]) -> Result<Vec<f64>> {
        let g = self.setup.f.grad(theta)?;
        self.setup.grad2_with(&g, theta, theta_next)
    }

    fn hess22(&self, _theta: &[f64], theta_next: &[f64]) -> Option<Result<SymMatrix>> {
        Some(self.setup.phi.hess(theta_next))
    }

    fn hess12(&self, theta: &[f64], _theta_next: &[f64]) -> Option<Result<Matrix>> {
        let s = &self.setup;
        Some((|| {
            let h = s.f.hess(theta)?.scale(s.eta);
            Ok(h.sub(&s.phi.hess(theta)?).into_matrix())
        })())
    }

    fn closed_form_step(&self, theta: &[f64]) -> Option<Result<Vec<f64>>> {
        Some(
            self.setup
                .f
                .grad(theta)
                .and_then(|g| self.setup.step_with(&g, theta)),
        )
    }
}

/// Mirror prox: `Q^m_θ(θ′) = η ∂f(ζ)ᵀθ′ + D_Φ(θ′, θ)` where `ζ` is the
/// mirror-descent step from `θ`.
#[derive(Debug)]
pub struct MirrorProx {
    setup: MirrorSetup,
    label: String,
    /// Last `(θ, ∂f(ζ(θ)))`; the inner solver evaluates many `θ′` per `θ`.
    cache: Mutex<Option<(Vec<f64>, Vec<f64>)>>,
}

impl Clone for MirrorProx {
    fn clone(&self) -> Self {
        Self {
            setup: self.setup.clone(),
            label: self.label.clone(),
            cache: Mutex::new(None),
        }
    }
}

impl MirrorProx {
    pub fn new(f: Objective, phi: MirrorMap, eta: f64, domain: ConvexDomain) -> Result<Self> {
        let label = format!("mirror_prox[{}, {}]", phi.name(), f.name());
        Ok(Self {
            setup: MirrorSetup::new(f, phi, eta, domain)?,
            label,
            cache: Mutex::new(None),
        })
    }

    pub fn eta(&self) -> f64 {
        self.setup.eta
    }

    pub fn constants(&self) -> (Option<f64>, Option<f64>) {
        (self.setup.gamma, self.setup.beta)
    }

    pub fn warnings(&self) -> Vec<String> {
        self.setup.warnings()
    }

    /// The descent method sharing `f`, `Φ`, `η` and the domain.
    pub fn descent(&self) -> MirrorDescent {
        MirrorDescent {
            label: self.label.replace("mirror_prox", "mirror_descent"),
            setup: self.setup.clone(),
        }
    }

    /// `ζ = M(θ)` for the underlying mirror descent.
    pub fn intermediate(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let g = self.setup.f.grad(theta)?;
        self.setup.step_with(&g, theta)
    }

    fn extra_gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let mut cache = self.cache.lock().unwrap_or_else(|p| p.into_inner());
        if let Some((t, g)) = cache.as_ref() {
            if t.as_slice() == theta {
                return Ok(g.clone());
            }
        }
        let zeta = self.intermediate(theta)?;
        let g = self.setup.f.grad(&zeta)?;
        *cache = Some((theta.to_vec(), g.clone()));
        Ok(g)
    }
}

impl Surrogate for MirrorProx {
    fn label(&self) -> &str {
        &self.label
    }

    fn domain(&self) -> &ConvexDomain {
        &self.setup.domain
    }

    fn value(&self, theta: &[f64], theta_next: &[f64]) -> Result<f64> {
        let g = self.extra_gradient(theta)?;
        self.setup.value_with(&g, theta, theta_next)
    }

    fn grad2(&self, theta: &[f64], theta_next: &[f64]) -> Result<Vec<f64>> {
        let g = self.extra_gradient(theta)?;
        self.setup.grad2_with(&g, theta, theta_next)
    }

    fn hess22(&self, _theta: &[f64], theta_next: &[f64]) -> Option<Result<SymMatrix>> {
        Some(self.setup.phi.hess(theta_next))
    }

    fn closed_form_step(&self, theta: &[f64]) -> Option<Result<Vec<f64>>> {
        Some(
            self.extra_gradient(theta)
                .and_then(|g| self.setup.step_with(&g, theta)),
        )
    }

    fn aux_point(&self, theta: &[f64]) -> Option<Result<Vec<f64>>> {
        Some(self.intermediate(theta))
    }
}

pub fn mirror_descent_problem(
    f: Objective,
    phi: MirrorMap,
    eta: f64,
    domain: ConvexDomain,
) -> Result<MirrorDescent> {
    MirrorDescent::new(f, phi, eta, domain)
}

pub fn mirror_prox_problem(
    f: Objective,
    phi: MirrorMap,
    eta: f64,
    domain: ConvexDomain,
) -> Result<MirrorProx> {
    MirrorProx::new(f, phi, eta, domain)
}

/// Mirror descent with `Φ = ½‖x‖²`, i.e. projected gradient descent.
pub fn gradient_descent_problem(f: Objective, eta: f64, domain: ConvexDomain) -> Result<MirrorDescent> {
    MirrorDescent::new(f, MirrorMap::Quadratic, eta, domain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::surrogate::{inner_minimize, inner_minimize_with, InnerOptions, ParamVector};

    fn diag_quadratic(d: &[f64]) -> Objective {
        Objective::quadratic_at_origin(SymMatrix::from_diag(d)).unwrap()
    }

    #[test]
    fn gradient_step_examples() {
        let p = gradient_descent_problem(
            diag_quadratic(&[1.0]),
            0.5,
            ConvexDomain::full_space(1).unwrap(),
        )
        .unwrap();
        let next = inner_minimize(&p, &ParamVector::scalar(1.0)).unwrap();
        assert!((next[0] - 0.5).abs() < 1e-15);

        let p = gradient_descent_problem(
            diag_quadratic(&[1.0, 4.0]),
            0.4,
            ConvexDomain::full_space(2).unwrap(),
        )
        .unwrap();
        let next = inner_minimize(&p, &ParamVector::from(vec![1.0, 1.0])).unwrap();
        assert!((next[0] - 0.6).abs() < 1e-15 && (next[1] + 0.6).abs() < 1e-15);
    }

    #[test]
    fn surrogate_on_diagonal_is_linear_term() {
        let p = mirror_descent_problem(
            Objective::smooth_log_sum_exp(0.5, vec![0.2, 0.3, 0.5]).unwrap(),
            MirrorMap::NegEntropy,
            0.3,
            ConvexDomain::simplex(3, 0.0).unwrap(),
        )
        .unwrap();
        let mut r = rng::seeded(1, 0);
        for _ in 0..50 {
            let t = p.domain().sample(&mut r);
            let g = p.objective().grad(&t).unwrap();
            let q = p.value(&t, &t).unwrap();
            assert!((q - 0.3 * linalg::dot(&g, &t)).abs() < 1e-14);
            let g2 = p.grad2(&t, &t).unwrap();
            for (a, b) in g2.iter().zip(&g) {
                assert!((a - 0.3 * b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn multiplicative_weights_match_grid_search() {
        let f = Objective::quadratic(SymMatrix::identity(3), vec![0.2, 0.3, 0.5]).unwrap();
        let p = mirror_descent_problem(
            f,
            MirrorMap::NegEntropy,
            0.7,
            ConvexDomain::simplex(3, 0.0).unwrap(),
        )
        .unwrap();
        let theta = [0.6, 0.3, 0.1];
        let next = inner_minimize(&p, &ParamVector::from(theta.to_vec())).unwrap();
        let best = p.value(&theta, &next).unwrap();
        // 10⁴-point grid over the 2-simplex (step 1/140 per axis).
        let n = 140;
        let mut grid_best = f64::INFINITY;
        let mut grid_arg = vec![];
        for i in 1..n {
            for j in 1..(n - i) {
                let x = [i as f64 / n as f64, j as f64 / n as f64, (n - i - j) as f64 / n as f64];
                let v = p.value(&theta, &x).unwrap();
                if v < grid_best {
                    grid_best = v;
                    grid_arg = x.to_vec();
                }
            }
        }
        assert!(best <= grid_best + 1e-15);
        assert!(linalg::dist2(&grid_arg, &next) < 2.0 / n as f64);
    }

    #[test]
    fn closed_form_matches_numeric_inner_solve() {
        let mut r = rng::seeded(5, 0);
        let cases: Vec<Box<dyn Surrogate>> = vec![
            Box::new(
                mirror_descent_problem(
                    Objective::quadratic(SymMatrix::from_diag(&[1.0, 2.5]), vec![0.1, -0.4])
                        .unwrap(),
                    MirrorMap::Quadratic,
                    0.2,
                    ConvexDomain::box_(vec![-1.0, -1.0], vec![1.0, 0.5]).unwrap(),
                )
                .unwrap(),
            ),
            Box::new(
                mirror_descent_problem(
                    Objective::quadratic(SymMatrix::identity(3), vec![0.2, 0.3, 0.5]).unwrap(),
                    MirrorMap::NegEntropy,
                    0.5,
                    ConvexDomain::simplex(3, 0.0).unwrap(),
                )
                .unwrap(),
            ),
            Box::new(
                mirror_prox_problem(
                    Objective::smooth_log_sum_exp(0.5, vec![0.3, -0.2]).unwrap(),
                    MirrorMap::ball(2.0).unwrap(),
                    0.4,
                    ConvexDomain::ball(vec![0.0, 0.0], 1.0, false).unwrap(),
                )
                .unwrap(),
            ),
        ];
        for p in &cases {
            for _ in 0..100 {
                let t = ParamVector::from(p.domain().sample(&mut r));
                let a = inner_minimize(p.as_ref(), &t).unwrap();
                let b = inner_minimize_with(p.as_ref(), &t, &InnerOptions::numeric()).unwrap();
                assert!(linalg::dist2(&a, &b) < 1e-6, "{} {a:?} {b:?}", p.label());
                assert!(p.domain().contains(&a));
                let g = p.grad2(&t, &a).unwrap();
                assert!(linalg::dot(&g, &linalg::sub(&t, &a)) >= -1e-8);
            }
        }
    }

    #[test]
    fn prox_quadratic_multiplier() {
        let p = mirror_prox_problem(
            diag_quadratic(&[1.0]),
            MirrorMap::Quadratic,
            0.4,
            ConvexDomain::full_space(1).unwrap(),
        )
        .unwrap();
        let next = inner_minimize(&p, &ParamVector::scalar(1.0)).unwrap();
        assert!((next[0] - 0.76).abs() < 1e-15);
        assert!((p.aux_point(&[1.0]).unwrap().unwrap()[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn inverse_gradient_roundtrip() {
        let mut r = rng::seeded(8, 0);
        for phi in [MirrorMap::Quadratic, MirrorMap::NegEntropy, MirrorMap::ball(3.0).unwrap()] {
            for _ in 0..50 {
                let x: Vec<f64> = match phi {
                    MirrorMap::NegEntropy => (0..3).map(|_| rng::open_uniform(&mut r) + 0.01).collect(),
                    _ => linalg::scale(&rng::unit_vector(&mut r, 3), 1.5 * rng::open_uniform(&mut r)),
                };
                let back = inverse_mirror_gradient(&phi, &phi.grad(&x).unwrap()).unwrap();
                assert!(linalg::dist2(&back, &x) < 1e-10 * (1.0 + linalg::norm2(&x)), "{phi:?}");
            }
        }
    }

    #[test]
    fn step_size_warning() {
        let f = Objective::smooth_log_sum_exp(0.5, vec![0.0, 0.0]).unwrap();
        let dom = ConvexDomain::ball(vec![0.0, 0.0], 1.0, false).unwrap();
        let ok = mirror_prox_problem(f.clone(), MirrorMap::ball(2.0).unwrap(), 0.4, dom.clone()).unwrap();
        assert!(ok.warnings().is_empty());
        let bad = mirror_prox_problem(f, MirrorMap::ball(2.0).unwrap(), 0.6, dom).unwrap();
        assert_eq!(bad.warnings().len(), 1);
    }
}
