//! Sample-rate sweeps: `ρ̄` of the empirical EM surrogate against the
//! population value as the sample size grows.

use rayon::prelude::*;

use crate::error::{Result, SurroError};
use crate::linalg;
use crate::models::{em_population_problem, em_sample_problem, GaussianLatentModel, MixtureEm, SymmetricMixture};
use crate::rates::curvature::{curvature_at, CurvatureFrame, FdSpec};
use crate::rates::transforms::estimate_theta_star;
use crate::rng;
use crate::surrogate::{ParamVector, StopRule, Surrogate};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepModel {
    Gaussian(GaussianLatentModel),
    /// Symmetric two-component mixture, whose curvature depends on the data.
    Mixture(SymmetricMixture),
}

impl SweepModel {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Gaussian(_) => "gaussian_latent",
            Self::Mixture(_) => "mixture",
        }
    }

    fn theta_star(&self) -> f64 {
        match self {
            Self::Gaussian(m) => m.theta_star,
            Self::Mixture(m) => m.theta_star,
        }
    }

    fn population(&self) -> Box<dyn Surrogate> {
        match self {
            Self::Gaussian(m) => Box::new(em_population_problem(*m)),
            Self::Mixture(m) => Box::new(MixtureEm::population(*m)),
        }
    }

    fn sample_problem(&self, k: usize, seed: u64) -> Result<Box<dyn Surrogate>> {
        let mut r = rng::seeded(seed, k as u64);
        Ok(match self {
            Self::Gaussian(m) => Box::new(em_sample_problem(*m, m.sample(k, &mut r))?),
            Self::Mixture(m) => Box::new(MixtureEm::sample(*m, m.sample(k, &mut r))?),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub k: usize,
    pub seed: u64,
    pub rho_samp: f64,
    pub abs_dev: f64,
    pub theta_hat: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub k: usize,
    pub median_abs_dev: f64,
    pub q90_abs_dev: f64,
}

/// `ρ̄` of a frame, or 0 when `Ã` is not positive-definite.
fn rho_sup_or_zero(frame: &CurvatureFrame) -> Result<f64> {
    if linalg::positive_definite_spectrum(&frame.a_tilde).is_err() {
        return Ok(0.0);
    }
    Ok(linalg::generalized_rate_pair(&frame.a_tilde, &frame.b_tilde)?.rho_sup)
}

/// Population `ρ̄` at the model's true parameter.
pub fn population_rate(model: &SweepModel, fd: &FdSpec) -> Result<f64> {
    let p = model.population();
    rho_sup_or_zero(&curvature_at(p.as_ref(), &[model.theta_star()], fd)?)
}

/// One row per `(k, seed)`, sorted by `k` then `seed`. Cells run in
/// parallel on the current rayon pool; cell `(k, seed)` draws its data
/// from stream `k` of generator `seed`, so results do not depend on the
/// scheduling.
pub fn sample_rate_sweep(model: &SweepModel, ks: &[usize], seeds: &[u64]) -> Result<Vec<SweepRow>> {
    if ks.is_empty() || seeds.is_empty() {
        return Err(SurroError::InvalidArgument(
            "sweep needs at least one sample size and one seed".into(),
        ));
    }
    if ks[0] == 0 || ks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SurroError::InvalidArgument(
            "sample sizes must be positive and strictly ascending".into(),
        ));
    }
    let fd = FdSpec::default();
    let rho_pop = population_rate(model, &fd)?;
    let mut cells: Vec<(usize, u64)> = ks
        .iter()
        .flat_map(|&k| seeds.iter().map(move |&s| (k, s)))
        .collect();
    cells.sort_unstable();
    cells.dedup();
    let start = ParamVector::scalar(model.theta_star());
    cells
        .par_iter()
        .map(|&(k, seed)| {
            let problem = model.sample_problem(k, seed)?;
            let theta_hat = estimate_theta_star(problem.as_ref(), &start, &StopRule::default(), &fd)?;
            let rho_samp = rho_sup_or_zero(&curvature_at(problem.as_ref(), &theta_hat, &fd)?)?;
            Ok(SweepRow {
                k,
                seed,
                rho_samp,
                abs_dev: (rho_samp - rho_pop).abs(),
                theta_hat: theta_hat[0],
            })
        })
        .collect()
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Median and 90% quantile of `abs_dev` for each `k`, in ascending `k`.
pub fn summarize(rows: &[SweepRow]) -> Vec<SweepSummary> {
    let mut ks: Vec<usize> = rows.iter().map(|r| r.k).collect();
    ks.sort_unstable();
    ks.dedup();
    ks.into_iter()
        .map(|k| {
            let mut devs: Vec<f64> = rows.iter().filter(|r| r.k == k).map(|r| r.abs_dev).collect();
            devs.sort_by(f64::total_cmp);
            SweepSummary {
                k,
                median_abs_dev: quantile(&devs, 0.5),
                q90_abs_dev: quantile(&devs, 0.9),
            }
        })
        .collect()
}
