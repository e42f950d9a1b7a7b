//! Symmetric two-component mixture `½N(θ, 1) + ½N(−θ, 1)`, used as a
//! demonstration model without analytic curvature.

use std::f64::consts::PI;

use crate::error::{Result, SurroError};
use crate::linalg::SymMatrix;
use crate::rng::{self, SurroRng};
use crate::surrogate::{ConvexDomain, Surrogate};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricMixture {
    pub theta_star: f64,
}

impl SymmetricMixture {
    pub fn new(theta_star: f64) -> Result<Self> {
        if !(theta_star > 0.0 && theta_star.is_finite()) {
            return Err(SurroError::InvalidArgument(
                "mixture location must be positive".into(),
            ));
        }
        Ok(Self { theta_star })
    }

    pub fn sample(&self, k: usize, rng: &mut SurroRng) -> Vec<f64> {
        (0..k)
            .map(|_| {
                let sign = if rng::open_uniform(rng) < 0.5 { 1.0 } else { -1.0 };
                sign * self.theta_star + rng::standard_normal(rng)
            })
            .collect()
    }

    pub fn neg_log_density(theta: f64, y: f64) -> f64 {
        // ½N(y; θ, 1) + ½N(y; −θ, 1) = N(y; 0, 1)·e^{−θ²/2}·cosh(θy).
        let a = (theta * y).abs();
        let log_cosh = a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2;
        0.5 * (2.0 * PI).ln() + 0.5 * y * y + 0.5 * theta * theta - log_cosh
    }

    /// Quadrature points `(y, w)` for expectations under the model.
    ///
    /// The integrands involve `tanh(θy)`, whose complex poles slow down
    /// Gauss–Hermite; the trapezoid rule on a fine grid converges
    /// geometrically for such analytic, rapidly decaying integrands.
    pub fn quadrature_points(&self) -> Vec<(f64, f64)> {
        let t = self.theta_star;
        let half_width = t + 14.0;
        let h = 0.01;
        let n = (2.0 * half_width / h).ceil() as usize;
        (0..=n)
            .map(|i| {
                let y = -half_width + i as f64 * h;
                (y, h * (-Self::neg_log_density(t, y)).exp())
            })
            .collect()
    }

    /// `E[Y² sech²(θ⋆Y)]` under the model, the population EM rate.
    pub fn population_rate(&self) -> f64 {
        let t = self.theta_star;
        self.quadrature_points()
            .iter()
            .map(|&(y, w)| w * y * y / (t * y).cosh().powi(2))
            .sum()
    }
}

/// Which distribution the E-step averages over.
#[derive(Debug, Clone, PartialEq)]
enum Source {
    Population(Vec<(f64, f64)>),
    Sample(Vec<f64>),
}

/// EM for the symmetric mixture:
/// `Q_θ(θ′) = ½θ′² − θ′·E[tanh(θY)Y] + ½E[Y²] + const`.
#[derive(Debug, Clone)]
pub struct MixtureEm {
    model: SymmetricMixture,
    source: Source,
    domain: ConvexDomain,
}

impl MixtureEm {
    pub fn population(model: SymmetricMixture) -> Self {
        let points = model.quadrature_points();
        Self {
            model,
            source: Source::Population(points),
            domain: ConvexDomain::FullSpace { dim: 1 },
        }
    }

    pub fn sample(model: SymmetricMixture, data: Vec<f64>) -> Result<Self> {
        if data.is_empty() {
            return Err(SurroError::EmptyData);
        }
        Ok(Self {
            model,
            source: Source::Sample(data),
            domain: ConvexDomain::FullSpace { dim: 1 },
        })
    }

    pub fn model(&self) -> &SymmetricMixture {
        &self.model
    }

    fn expect(&self, g: impl Fn(f64) -> f64) -> f64 {
        match &self.source {
            Source::Population(pts) => pts.iter().map(|&(y, w)| w * g(y)).sum(),
            Source::Sample(d) => d.iter().map(|&y| g(y)).sum::<f64>() / d.len() as f64,
        }
    }

    fn target(&self, theta: f64) -> f64 {
        self.expect(|y| (theta * y).tanh() * y)
    }
}

impl Surrogate for MixtureEm {
    fn label(&self) -> &str {
        match self.source {
            Source::Population(_) => "mixture_em_population",
            Source::Sample(_) => "mixture_em_sample",
        }
    }

    fn domain(&self) -> &ConvexDomain {
        &self.domain
    }

    fn value(&self, theta: &[f64], theta_next: &[f64]) -> Result<f64> {
        let tn = theta_next[0];
        Ok(0.5 * tn * tn - tn * self.target(theta[0])
            + 0.5 * self.expect(|y| y * y)
            + 0.5 * (2.0 * PI).ln())
    }

    fn grad2(&self, theta: &[f64], theta_next: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![theta_next[0] - self.target(theta[0])])
    }

    fn hess22(&self, _theta: &[f64], _theta_next: &[f64]) -> Option<Result<SymMatrix>> {
        Some(Ok(SymMatrix::scalar(1.0)))
    }

    fn closed_form_step(&self, theta: &[f64]) -> Option<Result<Vec<f64>>> {
        Some(Ok(vec![self.target(theta[0])]))
    }

    fn lyapunov(&self, theta: &[f64]) -> Option<f64> {
        let t = theta[0];
        Some(self.expect(|y| SymmetricMixture::neg_log_density(t, y)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surrogate::{iterate, ParamVector, StopRule};

    #[test]
    fn population_fixed_point_is_truth() {
        let m = SymmetricMixture::new(1.5).unwrap();
        let p = MixtureEm::population(m);
        let tr = iterate(&p, &ParamVector::scalar(0.8), &StopRule::default()).unwrap();
        assert!((tr.last()[0] - 1.5).abs() < 1e-10, "{}", tr.last()[0]);
        let r = m.population_rate();
        assert!(r > 0.0 && r < 1.0);
        // Derivative of the population map at θ⋆ by central differences.
        let h = 1e-4;
        let d = (p.closed_form_step(&[1.5 + h]).unwrap().unwrap()[0]
            - p.closed_form_step(&[1.5 - h]).unwrap().unwrap()[0])
            / (2.0 * h);
        assert!((d - r).abs() < 1e-7);
    }

    #[test]
    fn neg_log_density_matches_direct_formula() {
        for (t, y) in [(0.3, 1.2), (1.5, -0.7), (2.0, 3.0)] {
            let n = |m: f64| (-(y - m) * (y - m) / 2.0).exp() / (2.0 * PI).sqrt();
            let direct = -(0.5 * n(t) + 0.5 * n(-t)).ln();
            assert!((SymmetricMixture::neg_log_density(t, y) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn sample_em_likelihood_is_monotone() {
        let m = SymmetricMixture::new(1.5).unwrap();
        let mut r = rng::seeded(4, 0);
        let p = MixtureEm::sample(m, m.sample(200, &mut r)).unwrap();
        let tr = iterate(&p, &ParamVector::scalar(0.5), &StopRule::default()).unwrap();
        assert!(tr.max_lyapunov_increase().unwrap() <= 1e-10);
    }
}
