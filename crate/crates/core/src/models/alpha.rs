//! α-EM on the Gaussian latent model, with the surrogate integrals
//! evaluated by adaptive Gauss–Hermite quadrature.

use std::sync::OnceLock;

use crate::error::{Result, SurroError};
use crate::linalg::SymMatrix;
use crate::models::latent::GaussianLatentModel;
use crate::quadrature::{GaussHermite, ADAPTIVE_LADDER};
use crate::surrogate::{ConvexDomain, Surrogate};

/// Relative agreement required between successive quadrature levels.
pub const QUADRATURE_TOL: f64 = 1e-10;

/// The index `α ≠ 1` of the divergence `f_α(x) = (1 − x^α)/(α(α − 1))`,
/// with `f₀ = log`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaIndex(f64);

impl AlphaIndex {
    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha == 1.0 {
            return Err(SurroError::InvalidArgument(format!(
                "alpha must be finite and different from 1, got {alpha}"
            )));
        }
        Ok(Self(alpha))
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    pub fn f_alpha(&self, x: f64) -> f64 {
        let a = self.0;
        if a == 0.0 {
            x.ln()
        } else {
            (1.0 - x.powf(a)) / (a * (a - 1.0))
        }
    }

    pub fn f_alpha_second(&self, x: f64) -> f64 {
        // Both branches give −x^{α−2}.
        -x.powf(self.0 - 2.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AlphaMode {
    Population,
    Sample(Vec<f64>),
}

fn rules() -> &'static [GaussHermite] {
    static RULES: OnceLock<Vec<GaussHermite>> = OnceLock::new();
    RULES.get_or_init(|| ADAPTIVE_LADDER.iter().map(|&n| GaussHermite::new(n)).collect())
}

/// `Q^α_θ(θ′) = −E ∫ p_θ(x|Y) f_α(p_θ′(x, Y)/p_θ(x, Y)) dx`.
#[derive(Debug, Clone)]
pub struct AlphaEm {
    model: GaussianLatentModel,
    alpha: AlphaIndex,
    mode: AlphaMode,
    label: String,
    domain: ConvexDomain,
}

/// Integrand triple `(value, ∂_θ′, ∂²_θ′)` at one latent point.
fn integrand(alpha: f64, sx2: f64, theta: f64, theta_next: f64, x: f64) -> [f64; 3] {
    let log_r = ((x - theta).powi(2) - (x - theta_next).powi(2)) / (2.0 * sx2);
    let sc = (x - theta_next) / sx2;
    if alpha == 0.0 {
        return [-log_r, -sc, 1.0 / sx2];
    }
    let ra = (alpha * log_r).exp();
    let c = ra / (1.0 - alpha);
    [
        (ra - 1.0) / (alpha * (alpha - 1.0)),
        -c * sc,
        -c * (alpha * sc * sc - 1.0 / sx2),
    ]
}

impl AlphaEm {
    pub fn new(model: GaussianLatentModel, alpha: AlphaIndex, mode: AlphaMode) -> Result<Self> {
        if let AlphaMode::Sample(d) = &mode {
            if d.is_empty() {
                return Err(SurroError::EmptyData);
            }
        }
        let label = format!(
            "alpha_em[{}, alpha={}]",
            match mode {
                AlphaMode::Population => "population",
                AlphaMode::Sample(_) => "sample",
            },
            alpha.value()
        );
        Ok(Self {
            model,
            alpha,
            mode,
            label,
            domain: ConvexDomain::FullSpace { dim: 1 },
        })
    }

    pub fn alpha(&self) -> AlphaIndex {
        self.alpha
    }

    pub fn model(&self) -> &GaussianLatentModel {
        &self.model
    }

    fn with_rule(&self, rule: &GaussHermite, theta: f64, theta_next: f64) -> [f64; 3] {
        let m = &self.model;
        let a = self.alpha.value();
        let s = m.posterior_var().sqrt();
        let inner = |y: f64| {
            let mut acc = [0.0; 3];
            for (x, w) in rule.normal_points(m.posterior_mean(theta, y), s) {
                let v = integrand(a, m.sigma_x2, theta, theta_next, x);
                for k in 0..3 {
                    acc[k] += w * v[k];
                }
            }
            acc
        };
        let mut total = [0.0; 3];
        match &self.mode {
            AlphaMode::Population => {
                for (y, wy) in rule.normal_points(m.theta_star, m.tau2().sqrt()) {
                    let v = inner(y);
                    for k in 0..3 {
                        total[k] += wy * v[k];
                    }
                }
            }
            AlphaMode::Sample(data) => {
                for &y in data {
                    let v = inner(y);
                    for k in 0..3 {
                        total[k] += v[k];
                    }
                }
                let n = data.len() as f64;
                total.iter_mut().for_each(|t| *t /= n);
            }
        }
        total
    }

    /// `(Q, ∂₂Q, ∂₂₂Q)` at `(θ, θ′)`, refining along the node ladder until two
    /// successive levels agree.
    pub fn integrate(&self, theta: &[f64], theta_next: &[f64]) -> Result<[f64; 3]> {
        for v in [theta, theta_next] {
            if v.len() != 1 {
                return Err(SurroError::DimensionMismatch {
                    expected: 1,
                    got: v.len(),
                });
            }
        }
        let (t, tn) = (theta[0], theta_next[0]);
        let rules = rules();
        let mut prev = self.with_rule(&rules[0], t, tn);
        for rule in &rules[1..] {
            let cur = self.with_rule(rule, t, tn);
            let settled = cur
                .iter()
                .zip(&prev)
                .all(|(c, p)| (c - p).abs() <= QUADRATURE_TOL * (1.0 + c.abs()));
            if settled {
                return Ok(cur);
            }
            if cur.iter().any(|c| !c.is_finite()) {
                break;
            }
            prev = cur;
        }
        Err(SurroError::QuadratureFailure {
            tolerance: QUADRATURE_TOL,
            nodes: *ADAPTIVE_LADDER.last().expect("non-empty ladder"),
        })
    }
}

impl Surrogate for AlphaEm {
    fn label(&self) -> &str {
        &self.label
    }

    fn domain(&self) -> &ConvexDomain {
        &self.domain
    }

    fn value(&self, theta: &[f64], theta_next: &[f64]) -> Result<f64> {
        Ok(self.integrate(theta, theta_next)?[0])
    }

    fn grad2(&self, theta: &[f64], theta_next: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![self.integrate(theta, theta_next)?[1]])
    }

    fn hess22(&self, theta: &[f64], theta_next: &[f64]) -> Option<Result<SymMatrix>> {
        Some(self.integrate(theta, theta_next).map(|v| SymMatrix::scalar(v[2])))
    }
}

pub fn alpha_em_problem(
    model: GaussianLatentModel,
    alpha: AlphaIndex,
    mode: AlphaMode,
) -> Result<AlphaEm> {
    AlphaEm::new(model, alpha, mode)
}

/// Population α-EM contraction factor for this model,
/// `1 − (1 − w)/(1 − α)`, used as a reference value.
pub fn population_alpha_factor(model: &GaussianLatentModel, alpha: AlphaIndex) -> f64 {
    1.0 - (1.0 - model.weight()) / (1.0 - alpha.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::latent::{em_population_problem, em_sample_problem};
    use crate::rng;
    use crate::surrogate::{inner_minimize, ParamVector};

    #[test]
    fn f_alpha_basics() {
        for a in [-1.0, 0.0, 0.25, 0.5, 2.0] {
            let ai = AlphaIndex::new(a).unwrap();
            assert!(ai.f_alpha(1.0).abs() < 1e-15);
            for x in [0.1, 0.7, 1.0, 3.0, 10.0] {
                let h = 1e-4 * x;
                let fd = (ai.f_alpha(x + h) - 2.0 * ai.f_alpha(x) + ai.f_alpha(x - h)) / (h * h);
                assert!(fd <= 1e-6 && ai.f_alpha_second(x) < 0.0);
                assert!((fd - ai.f_alpha_second(x)).abs() < 1e-4 * (1.0 + fd.abs()));
            }
        }
        assert!(AlphaIndex::new(1.0).is_err());
    }

    #[test]
    fn alpha_zero_matches_classical_em_gradient() {
        let m = GaussianLatentModel::new(1.0, 2.0, 0.5).unwrap();
        let pop = em_population_problem(m);
        let a0 = alpha_em_problem(m, AlphaIndex::new(0.0).unwrap(), AlphaMode::Population).unwrap();
        let mut r = rng::seeded(2, 0);
        let data = m.sample(15, &mut r);
        let samp = em_sample_problem(m, data.clone()).unwrap();
        let a0s = alpha_em_problem(m, AlphaIndex::new(0.0).unwrap(), AlphaMode::Sample(data)).unwrap();
        for _ in 0..30 {
            let t = [rng::standard_normal(&mut r)];
            let tn = [rng::standard_normal(&mut r)];
            let g = a0.grad2(&t, &tn).unwrap()[0];
            assert!((g - pop.grad2(&t, &tn).unwrap()[0]).abs() < 1e-9);
            let gs = a0s.grad2(&t, &tn).unwrap()[0];
            assert!((gs - samp.grad2(&t, &tn).unwrap()[0]).abs() < 1e-9);
            // Values agree up to a term depending on θ only.
            let d1 = a0.value(&t, &tn).unwrap() - pop.value(&t, &tn).unwrap();
            let d2 = a0.value(&t, &t).unwrap() - pop.value(&t, &t).unwrap();
            assert!((d1 - d2).abs() < 1e-9);
        }
    }

    #[test]
    fn reduction_to_log_is_linear_in_alpha() {
        let m = GaussianLatentModel::new(1.0, 1.0, 0.0).unwrap();
        let q0 = alpha_em_problem(m, AlphaIndex::new(0.0).unwrap(), AlphaMode::Population).unwrap();
        let mut r = rng::seeded(21, 0);
        let pairs: Vec<(f64, f64)> = (0..20)
            .map(|_| (rng::standard_normal(&mut r), rng::standard_normal(&mut r)))
            .collect();
        let mut sups = vec![];
        for a in [1e-1, 1e-2, 1e-3] {
            let qa = alpha_em_problem(m, AlphaIndex::new(a).unwrap(), AlphaMode::Population).unwrap();
            let sup = pairs
                .iter()
                .map(|&(t, tn)| {
                    let v0 = q0.value(&[t], &[tn]).unwrap();
                    (qa.value(&[t], &[tn]).unwrap() - v0).abs() / (1.0 + v0.abs())
                })
                .fold(0.0, f64::max);
            sups.push(sup);
        }
        assert!(sups[1] < sups[0] && sups[2] < sups[1]);
        assert!((sups[1] / sups[2] - 10.0).abs() < 1.0);
    }

    #[test]
    fn population_step_matches_analytic_factor() {
        let m = GaussianLatentModel::new(1.0, 1.0, 0.0).unwrap();
        for a in [0.25, 0.5, -0.5] {
            let alpha = AlphaIndex::new(a).unwrap();
            let p = alpha_em_problem(m, alpha, AlphaMode::Population).unwrap();
            let next = inner_minimize(&p, &ParamVector::scalar(0.3)).unwrap();
            let expect = 0.3 * population_alpha_factor(&m, alpha);
            assert!((next[0] - expect).abs() < 1e-9, "alpha {a}: {} vs {expect}", next[0]);
        }
    }
}
