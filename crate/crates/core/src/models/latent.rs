//! Gaussian latent-variable model `X ~ N(θ, σx²)`, `Y = X + ε`,
//! `ε ~ N(0, σy²)`, and its EM surrogates.

use std::f64::consts::PI;

use crate::error::{Result, SurroError};
use crate::linalg::{Matrix, SymMatrix};
use crate::rng::{self, SurroRng};
use crate::surrogate::{ConvexDomain, Surrogate};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianLatentModel {
    pub sigma_x2: f64,
    pub sigma_y2: f64,
    pub theta_star: f64,
}

/// Fisher informations at `θ⋆`: complete data, observed data, and the
/// conditional (missing) part.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherInformation {
    pub i_xy: SymMatrix,
    pub i_y: SymMatrix,
    pub i_x_given_y: SymMatrix,
}

impl GaussianLatentModel {
    pub fn new(sigma_x2: f64, sigma_y2: f64, theta_star: f64) -> Result<Self> {
        for (name, v) in [("sigma_x2", sigma_x2), ("sigma_y2", sigma_y2)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SurroError::InvalidArgument(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !theta_star.is_finite() {
            return Err(SurroError::InvalidArgument("theta_star must be finite".into()));
        }
        Ok(Self {
            sigma_x2,
            sigma_y2,
            theta_star,
        })
    }

    /// `τ² = σx² + σy²`, the marginal variance of `Y`.
    pub fn tau2(&self) -> f64 {
        self.sigma_x2 + self.sigma_y2
    }

    /// Shrinkage weight `w = σy²/τ²` of the posterior mean
    /// `E[X | Y = y] = wθ + (1 − w)y`.
    pub fn weight(&self) -> f64 {
        self.sigma_y2 / self.tau2()
    }

    /// Posterior variance `σx²σy²/τ²`.
    pub fn posterior_var(&self) -> f64 {
        self.sigma_x2 * self.sigma_y2 / self.tau2()
    }

    pub fn posterior_mean(&self, theta: f64, y: f64) -> f64 {
        let w = self.weight();
        w * theta + (1.0 - w) * y
    }

    /// Missing-information ratio `I_XY⁻¹ I_{X|Y}`; equals the EM rate.
    pub fn missing_information_ratio(&self) -> f64 {
        self.weight()
    }

    /// `k` i.i.d. draws of `Y` under `θ⋆`.
    pub fn sample(&self, k: usize, rng: &mut SurroRng) -> Vec<f64> {
        let sd = self.tau2().sqrt();
        (0..k)
            .map(|_| self.theta_star + sd * rng::standard_normal(rng))
            .collect()
    }

    /// `−log p_θ(y)` for the observed-data marginal `N(θ, τ²)`.
    pub fn neg_log_marginal(&self, theta: f64, y: f64) -> f64 {
        let t2 = self.tau2();
        0.5 * (2.0 * PI * t2).ln() + (y - theta).powi(2) / (2.0 * t2)
    }
}

pub fn fisher_information(model: &GaussianLatentModel) -> FisherInformation {
    let i_xy = 1.0 / model.sigma_x2;
    let i_y = 1.0 / model.tau2();
    FisherInformation {
        i_xy: SymMatrix::scalar(i_xy),
        i_y: SymMatrix::scalar(i_y),
        i_x_given_y: SymMatrix::scalar(i_xy - i_y),
    }
}

fn check_scalar(theta: &[f64], theta_next: &[f64]) -> Result<()> {
    for v in [theta, theta_next] {
        if v.len() != 1 {
            return Err(SurroError::DimensionMismatch {
                expected: 1,
                got: v.len(),
            });
        }
    }
    Ok(())
}

/// Population EM: `Q_θ(θ′) = −E_{Y∼p_θ⋆} ∫ p_θ(x|Y) log p_θ′(x, Y) dx`,
/// in closed form for this model.
#[derive(Debug, Clone)]
pub struct EmPopulation {
    model: GaussianLatentModel,
    domain: ConvexDomain,
}

impl EmPopulation {
    pub fn new(model: GaussianLatentModel) -> Self {
        Self {
            model,
            domain: ConvexDomain::FullSpace { dim: 1 },
        }
    }

    pub fn model(&self) -> &GaussianLatentModel {
        &self.model
    }

    /// `E[m(Y)] = wθ + (1 − w)θ⋆`.
    fn mean_target(&self, theta: f64) -> f64 {
        self.model.posterior_mean(theta, self.model.theta_star)
    }
}

impl Surrogate for EmPopulation {
    fn label(&self) -> &str {
        "em_population"
    }

    fn domain(&self) -> &ConvexDomain {
        &self.domain
    }

    fn value(&self, theta: &[f64], theta_next: &[f64]) -> Result<f64> {
        check_scalar(theta, theta_next)?;
        let m = &self.model;
        let (sx2, sy2) = (m.sigma_x2, m.sigma_y2);
        let w = m.weight();
        let mu = self.mean_target(theta[0]);
        // E(m(Y) − θ′)² + s² = (μ − θ′)² + σx² for this model.
        let prior = 0.5 * (2.0 * PI * sx2).ln() + ((mu - theta_next[0]).powi(2) + sx2) / (2.0 * sx2);
        let noise = 0.5 * (2.0 * PI * sy2).ln()
            + (w * w * (m.tau2() + (m.theta_star - theta[0]).powi(2)) + m.posterior_var())
                / (2.0 * sy2);
        Ok(prior + noise)
    }

    fn grad2(&self, theta: &[f64], theta_next: &[f64]) -> Result<Vec<f64>> {
        check_scalar(theta, theta_next)?;
        Ok(vec![(theta_next[0] - self.mean_target(theta[0])) / self.model.sigma_x2])
    }

    fn hess22(&self, _theta: &[f64], _theta_next: &[f64]) -> Option<Result<SymMatrix>> {
        Some(Ok(SymMatrix::scalar(1.0 / self.model.sigma_x2)))
    }

    fn hess12(&self, _theta: &[f64], _theta_next: &[f64]) -> Option<Result<Matrix>> {
        Some(Ok(Matrix::from_diag(&[-self.model.weight() / self.model.sigma_x2])))
    }

    fn closed_form_step(&self, theta: &[f64]) -> Option<Result<Vec<f64>>> {
        Some(check_scalar(theta, theta).map(|_| vec![self.mean_target(theta[0])]))
    }

    /// Expected negative observed log-likelihood.
    fn lyapunov(&self, theta: &[f64]) -> Option<f64> {
        let m = &self.model;
        let t2 = m.tau2();
        Some(0.5 * (2.0 * PI * t2).ln() + (t2 + (theta[0] - m.theta_star).powi(2)) / (2.0 * t2))
    }
}

/// Sample EM on observations `Y₁..Y_k`.
#[derive(Debug, Clone)]
pub struct EmSample {
    model: GaussianLatentModel,
    data: Vec<f64>,
    mean: f64,
    domain: ConvexDomain,
}

impl EmSample {
    pub fn new(model: GaussianLatentModel, data: Vec<f64>) -> Result<Self> {
        if data.is_empty() {
            return Err(SurroError::EmptyData);
        }
        if data.iter().any(|y| !y.is_finite()) {
            return Err(SurroError::InvalidArgument("observations must be finite".into()));
        }
        let mean = data.iter().sum::<f64>() / data.len() as f64;
        Ok(Self {
            model,
            data,
            mean,
            domain: ConvexDomain::FullSpace { dim: 1 },
        })
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn model(&self) -> &GaussianLatentModel {
        &self.model
    }

    /// Sample-EM fixed point (the maximum-likelihood estimate `Ȳ`).
    pub fn fixed_point(&self) -> f64 {
        self.mean
    }
}

impl Surrogate for EmSample {
    fn label(&self) -> &str {
        "em_sample"
    }

    fn domain(&self) -> &ConvexDomain {
        &self.domain
    }

    fn value(&self, theta: &[f64], theta_next: &[f64]) -> Result<f64> {
        check_scalar(theta, theta_next)?;
        let m = &self.model;
        let (sx2, sy2, s2) = (m.sigma_x2, m.sigma_y2, m.posterior_var());
        let consts = 0.5 * (2.0 * PI * sx2).ln() + 0.5 * (2.0 * PI * sy2).ln();
        let total: f64 = self
            .data
            .iter()
            .map(|&y| {
                let mi = m.posterior_mean(theta[0], y);
                ((mi - theta_next[0]).powi(2) + s2) / (2.0 * sx2)
                    + ((y - mi).powi(2) + s2) / (2.0 * sy2)
            })
            .sum();
        Ok(consts + total / self.data.len() as f64)
    }

    fn grad2(&self, theta: &[f64], theta_next: &[f64]) -> Result<Vec<f64>> {
        check_scalar(theta, theta_next)?;
        let target = self.model.posterior_mean(theta[0], self.mean);
        Ok(vec![(theta_next[0] - target) / self.model.sigma_x2])
    }

    fn hess22(&self, _theta: &[f64], _theta_next: &[f64]) -> Option<Result<SymMatrix>> {
        Some(Ok(SymMatrix::scalar(1.0 / self.model.sigma_x2)))
    }

    fn hess12(&self, _theta: &[f64], _theta_next: &[f64]) -> Option<Result<Matrix>> {
        Some(Ok(Matrix::from_diag(&[-self.model.weight() / self.model.sigma_x2])))
    }

    fn closed_form_step(&self, theta: &[f64]) -> Option<Result<Vec<f64>>> {
        Some(check_scalar(theta, theta).map(|_| vec![self.model.posterior_mean(theta[0], self.mean)]))
    }

    /// Average negative observed log-likelihood.
    fn lyapunov(&self, theta: &[f64]) -> Option<f64> {
        let k = self.data.len() as f64;
        Some(
            self.data
                .iter()
                .map(|&y| self.model.neg_log_marginal(theta[0], y))
                .sum::<f64>()
                / k,
        )
    }
}

pub fn em_population_problem(model: GaussianLatentModel) -> EmPopulation {
    EmPopulation::new(model)
}

pub fn em_sample_problem(model: GaussianLatentModel, data: Vec<f64>) -> Result<EmSample> {
    EmSample::new(model, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surrogate::{inner_minimize, iterate, ParamVector, StopRule};

    #[test]
    fn fisher_examples() {
        let f = fisher_information(&GaussianLatentModel::new(1.0, 1.0, 0.0).unwrap());
        assert_eq!((f.i_xy.get(0, 0), f.i_y.get(0, 0), f.i_x_given_y.get(0, 0)), (1.0, 0.5, 0.5));
        let f = fisher_information(&GaussianLatentModel::new(1.0, 3.0, 0.0).unwrap());
        assert_eq!((f.i_xy.get(0, 0), f.i_y.get(0, 0), f.i_x_given_y.get(0, 0)), (1.0, 0.25, 0.75));
        let f = fisher_information(&GaussianLatentModel::new(1.0, 1e-12, 0.0).unwrap());
        assert!((f.i_y.get(0, 0) - 1.0).abs() < 1e-11);
        assert!(f.i_x_given_y.get(0, 0) < 1e-11);
    }

    #[test]
    fn fisher_matches_monte_carlo() {
        // −E ∂²_θ log p_θ(x, y) = 1/σx²; −E ∂²_θ log p_θ(y) = 1/τ². Both
        // second derivatives are constant, so estimate them from the score
        // variance instead, which does depend on the draws.
        let m = GaussianLatentModel::new(1.0, 1.0, 0.3).unwrap();
        let mut r = rng::seeded(99, 0);
        let n = 1_000_000;
        let (mut sxy, mut sy) = (0.0, 0.0);
        for _ in 0..n {
            let x = m.theta_star + m.sigma_x2.sqrt() * rng::standard_normal(&mut r);
            let y = x + m.sigma_y2.sqrt() * rng::standard_normal(&mut r);
            sxy += ((x - m.theta_star) / m.sigma_x2).powi(2);
            sy += ((y - m.theta_star) / m.tau2()).powi(2);
        }
        let f = fisher_information(&m);
        assert!((sxy / n as f64 - f.i_xy.get(0, 0)).abs() < 1e-2);
        assert!((sy / n as f64 - f.i_y.get(0, 0)).abs() < 1e-2);
    }

    #[test]
    fn population_step_is_affine_with_factor_w() {
        let m = GaussianLatentModel::new(1.0, 1.0, 2.0).unwrap();
        let p = em_population_problem(m);
        let next = inner_minimize(&p, &ParamVector::scalar(3.0)).unwrap();
        assert!((next[0] - 2.5).abs() < 1e-15);
        let fixed = inner_minimize(&p, &ParamVector::scalar(2.0)).unwrap();
        assert_eq!(fixed[0], 2.0);
    }

    #[test]
    fn sample_step_example() {
        let m = GaussianLatentModel::new(1.0, 1.0, 0.7).unwrap();
        let p = em_sample_problem(m, vec![0.7]).unwrap();
        let next = inner_minimize(&p, &ParamVector::scalar(1.7)).unwrap();
        assert!((next[0] - 1.2).abs() < 1e-15);
        assert_eq!(em_sample_problem(m, vec![]).unwrap_err(), SurroError::EmptyData);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let m = GaussianLatentModel::new(0.7, 1.9, -0.4).unwrap();
        let mut r = rng::seeded(5, 0);
        let data = m.sample(50, &mut r);
        let probs: Vec<Box<dyn Surrogate>> = vec![
            Box::new(em_population_problem(m)),
            Box::new(em_sample_problem(m, data).unwrap()),
        ];
        let h = 1e-5;
        for p in &probs {
            for _ in 0..100 {
                let t = rng::standard_normal(&mut r) * 2.0;
                let tn = rng::standard_normal(&mut r) * 2.0;
                let fd = (p.value(&[t], &[tn + h]).unwrap() - p.value(&[t], &[tn - h]).unwrap())
                    / (2.0 * h);
                let g = p.grad2(&[t], &[tn]).unwrap()[0];
                assert!((fd - g).abs() <= 1e-5 * (1.0 + g.abs()), "{}", p.label());
                let fd12 = (p.grad2(&[t + h], &[tn]).unwrap()[0]
                    - p.grad2(&[t - h], &[tn]).unwrap()[0])
                    / (2.0 * h);
                let an = p.hess12(&[t], &[tn]).unwrap().unwrap()[(0, 0)];
                assert!((fd12 - an).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn grad2_on_diagonal_is_objective_gradient() {
        let m = GaussianLatentModel::new(1.3, 0.6, 0.2).unwrap();
        let mut r = rng::seeded(6, 0);
        let data = m.sample(30, &mut r);
        let pop = em_population_problem(m);
        let samp = em_sample_problem(m, data).unwrap();
        let h = 1e-5;
        for p in [&pop as &dyn Surrogate, &samp] {
            for _ in 0..50 {
                let t = rng::standard_normal(&mut r);
                let df = (p.lyapunov(&[t + h]).unwrap() - p.lyapunov(&[t - h]).unwrap()) / (2.0 * h);
                assert!((p.grad2(&[t], &[t]).unwrap()[0] - df).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn sample_em_likelihood_is_monotone() {
        let m = GaussianLatentModel::new(1.0, 2.0, 1.0).unwrap();
        let mut r = rng::seeded(12, 0);
        let p = em_sample_problem(m, m.sample(20, &mut r)).unwrap();
        let trace = iterate(&p, &ParamVector::scalar(-5.0), &StopRule::default()).unwrap();
        assert!(trace.max_lyapunov_increase().unwrap() <= 1e-10);
        assert!((trace.last()[0] - p.fixed_point()).abs() < 1e-12);
    }
}
