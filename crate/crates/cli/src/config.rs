//! Experiment configs: one JSON object per run, unknown fields rejected.

use std::path::Path;

use serde::Deserialize;
use surro_core::models::{
    alpha_em_problem, em_population_problem, em_sample_problem, gradient_descent_problem,
    mirror_descent_problem, mirror_prox_problem, newton_problem, AlphaIndex, AlphaMode,
    GaussianLatentModel, MirrorMap, Objective,
};
use surro_core::rates::{FdSpec, RateWindow, VerdictOptions};
use surro_core::{rng, ConvexDomain, Matrix, StopRule, Surrogate, SymMatrix};

use crate::error::{io_error, CliError, CliResult, Context};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    GradientDescent,
    MirrorDescent,
    MirrorProx,
    EmPopulation,
    EmSample,
    AlphaEm,
    Newton,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::GradientDescent => "gradient_descent",
            Self::MirrorDescent => "mirror_descent",
            Self::MirrorProx => "mirror_prox",
            Self::EmPopulation => "em_population",
            Self::EmSample => "em_sample",
            Self::AlphaEm => "alpha_em",
            Self::Newton => "newton",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveSpec {
    /// `½(x − c)ᵀH(x − c)`; `center` defaults to the origin.
    Quadratic {
        h: Vec<Vec<f64>>,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
    LogSumExp { scale: f64, center: Vec<f64> },
    Quartic,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MirrorSpec {
    Quadratic,
    NegEntropy,
    Ball { r_prime: f64 },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    FullSpace {
        dim: usize,
    },
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
        #[serde(default)]
        open: bool,
    },
    Simplex {
        dim: usize,
        #[serde(default)]
        face_eps: f64,
    },
    AffineSlice {
        c: Vec<Vec<f64>>,
        b: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatentSpec {
    pub sigma_x2: f64,
    pub sigma_y2: f64,
    pub theta_star: f64,
}

/// A vector, or a string naming how to obtain one.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum VectorOrKeyword {
    Vector(Vec<f64>),
    Keyword(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopSpec {
    pub max_iters: Option<usize>,
    pub residual_tol: Option<f64>,
    pub stall_window: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdConfig {
    pub step: Option<f64>,
    pub richardson: Option<bool>,
}

/// Raw experiment config as written on disk.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub algorithm: Algorithm,
    pub objective: Option<ObjectiveSpec>,
    pub mirror_map: Option<MirrorSpec>,
    pub eta: Option<f64>,
    pub alpha: Option<f64>,
    pub latent: Option<LatentSpec>,
    /// Number of observations drawn (with `seed`) for sample-based EM.
    pub sample_size: Option<usize>,
    pub domain: Option<DomainSpec>,
    /// A vector or `"random(<seed>)"`.
    pub theta0: VectorOrKeyword,
    /// A vector or `"auto"` (the default).
    pub theta_star: Option<VectorOrKeyword>,
    pub stop: Option<StopSpec>,
    pub fd: Option<FdConfig>,
    #[serde(default)]
    pub seed: u64,
    pub tol_rate: Option<f64>,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::ConfigInvalid(msg.into())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(io_error(path))?;
        Self::from_json(&text)
    }

    /// Field presence rules per algorithm, checked before any computation.
    pub fn validate(&self) -> CliResult<()> {
        use Algorithm::*;
        let alg = self.algorithm;
        let (required, allowed): (&[&str], &[&str]) = match alg {
            GradientDescent => (&["objective", "eta"], &["domain"]),
            MirrorDescent | MirrorProx => (&["objective", "eta", "mirror_map"], &["domain"]),
            EmPopulation => (&["latent"], &[]),
            EmSample => (&["latent", "sample_size"], &[]),
            AlphaEm => (&["latent", "alpha"], &["sample_size"]),
            Newton => (&["objective"], &[]),
        };
        let present = [
            ("objective", self.objective.is_some()),
            ("mirror_map", self.mirror_map.is_some()),
            ("eta", self.eta.is_some()),
            ("alpha", self.alpha.is_some()),
            ("latent", self.latent.is_some()),
            ("sample_size", self.sample_size.is_some()),
            ("domain", self.domain.is_some()),
        ];
        for (field, is_set) in present {
            if required.contains(&field) && !is_set {
                return Err(invalid(format!("{} requires field {field}", alg.as_str())));
            }
            if is_set && !required.contains(&field) && !allowed.contains(&field) {
                return Err(invalid(format!("field {field} is not used by {}", alg.as_str())));
            }
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(invalid(format!("eta must be positive, got {eta}")));
            }
        }
        if self.sample_size == Some(0) {
            return Err(invalid("sample_size must be at least 1"));
        }
        if let VectorOrKeyword::Keyword(k) = &self.theta0 {
            parse_random(k)?;
        }
        if let Some(VectorOrKeyword::Keyword(k)) = &self.theta_star {
            if k != "auto" {
                return Err(invalid(format!("theta_star must be a vector or \"auto\", got {k:?}")));
            }
        }
        if let Some(t) = self.tol_rate {
            if !(t > 0.0) {
                return Err(invalid("tol_rate must be positive"));
            }
        }
        self.stop_rule().validate().map_err(|e| invalid(format!("stop: {e}")))?;
        self.fd_spec().validate().map_err(|e| invalid(format!("fd: {e}")))?;
        Ok(())
    }

    pub fn stop_rule(&self) -> StopRule {
        let d = StopRule::default();
        match self.stop {
            None => d,
            Some(s) => StopRule {
                max_iters: s.max_iters.unwrap_or(d.max_iters),
                residual_tol: s.residual_tol.unwrap_or(d.residual_tol),
                stall_window: s.stall_window.unwrap_or(d.stall_window),
            },
        }
    }

    pub fn fd_spec(&self) -> FdSpec {
        let d = FdSpec::default();
        match self.fd {
            None => d,
            Some(f) => FdSpec {
                step: f.step.unwrap_or(d.step),
                richardson: f.richardson.unwrap_or(d.richardson),
            },
        }
    }

    pub fn verdict_options(&self) -> VerdictOptions {
        let d = VerdictOptions::default();
        VerdictOptions {
            tol_rate: self.tol_rate.unwrap_or(d.tol_rate),
            window: RateWindow::default(),
        }
    }

    /// Assembles the surrogate problem. Builder warnings are returned
    /// alongside it.
    pub fn build(&self) -> CliResult<(Box<dyn Surrogate>, Vec<String>)> {
        use Algorithm::*;
        let ctx = || format!("building {} problem", self.algorithm.as_str());
        Ok(match self.algorithm {
            GradientDescent | MirrorDescent | MirrorProx => {
                let f = self.objective()?;
                let domain = match &self.domain {
                    Some(d) => build_domain(d)?,
                    None => ConvexDomain::full_space(f.dim()).context(ctx)?,
                };
                let eta = self.eta.expect("validated");
                match self.algorithm {
                    GradientDescent => {
                        let p = gradient_descent_problem(f, eta, domain).context(ctx)?;
                        let w = p.warnings();
                        (Box::new(p), w)
                    }
                    MirrorDescent => {
                        let phi = build_mirror(self.mirror_map.expect("validated"))?;
                        let p = mirror_descent_problem(f, phi, eta, domain).context(ctx)?;
                        let w = p.warnings();
                        (Box::new(p), w)
                    }
                    _ => {
                        let phi = build_mirror(self.mirror_map.expect("validated"))?;
                        let p = mirror_prox_problem(f, phi, eta, domain).context(ctx)?;
                        let w = p.warnings();
                        (Box::new(p), w)
                    }
                }
            }
            EmPopulation => (Box::new(em_population_problem(self.latent_model()?)), vec![]),
            EmSample => {
                let m = self.latent_model()?;
                let data = m.sample(self.sample_size.expect("validated"), &mut rng::seeded(self.seed, 0));
                (Box::new(em_sample_problem(m, data).context(ctx)?), vec![])
            }
            AlphaEm => {
                let m = self.latent_model()?;
                let alpha = AlphaIndex::new(self.alpha.expect("validated"))
                    .map_err(|e| invalid(format!("alpha: {e}")))?;
                let mode = match self.sample_size {
                    Some(k) => AlphaMode::Sample(m.sample(k, &mut rng::seeded(self.seed, 0))),
                    None => AlphaMode::Population,
                };
                (Box::new(alpha_em_problem(m, alpha, mode).context(ctx)?), vec![])
            }
            Newton => (Box::new(newton_problem(self.objective()?).context(ctx)?), vec![]),
        })
    }

    fn objective(&self) -> CliResult<Objective> {
        let spec = self.objective.as_ref().expect("validated");
        let r = match spec {
            ObjectiveSpec::Quadratic { h, center } => {
                let q = h.len();
                if q == 0 || h.iter().any(|r| r.len() != q) {
                    return Err(invalid("objective.h must be a non-empty square matrix"));
                }
                let m = Matrix::from_rows(h);
                if m.asymmetry() > 1e-12 {
                    return Err(invalid("objective.h must be symmetric"));
                }
                let c = center.clone().unwrap_or_else(|| vec![0.0; q]);
                Objective::quadratic(SymMatrix::new(m), c)
            }
            ObjectiveSpec::LogSumExp { scale, center } => {
                Objective::smooth_log_sum_exp(*scale, center.clone())
            }
            ObjectiveSpec::Quartic => Ok(Objective::Quartic1D),
        };
        r.map_err(|e| invalid(format!("objective: {e}")))
    }

    fn latent_model(&self) -> CliResult<GaussianLatentModel> {
        let l = self.latent.expect("validated");
        GaussianLatentModel::new(l.sigma_x2, l.sigma_y2, l.theta_star)
            .map_err(|e| invalid(format!("latent: {e}")))
    }

    /// Starting point: the given vector, or a draw from the domain.
    pub fn theta0(&self, problem: &dyn Surrogate) -> CliResult<Vec<f64>> {
        let v = match &self.theta0 {
            VectorOrKeyword::Vector(v) => v.clone(),
            VectorOrKeyword::Keyword(k) => {
                let seed = parse_random(k)?;
                problem.domain().sample(&mut rng::seeded(seed, 0))
            }
        };
        if v.len() != problem.dim() {
            return Err(invalid(format!(
                "theta0 has {} coordinates, problem has {}",
                v.len(),
                problem.dim()
            )));
        }
        Ok(v)
    }

    /// `Some(θ⋆)` when pinned, `None` for automatic estimation.
    pub fn pinned_theta_star(&self) -> Option<&[f64]> {
        match &self.theta_star {
            Some(VectorOrKeyword::Vector(v)) => Some(v),
            _ => None,
        }
    }
}

fn parse_random(k: &str) -> CliResult<u64> {
    k.strip_prefix("random(")
        .and_then(|r| r.strip_suffix(')'))
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| invalid(format!("theta0 must be a vector or \"random(<seed>)\", got {k:?}")))
}

fn build_mirror(spec: MirrorSpec) -> CliResult<MirrorMap> {
    match spec {
        MirrorSpec::Quadratic => Ok(MirrorMap::Quadratic),
        MirrorSpec::NegEntropy => Ok(MirrorMap::NegEntropy),
        MirrorSpec::Ball { r_prime } => {
            MirrorMap::ball(r_prime).map_err(|e| invalid(format!("mirror_map: {e}")))
        }
    }
}

pub fn build_domain(spec: &DomainSpec) -> CliResult<ConvexDomain> {
    let r = match spec {
        DomainSpec::FullSpace { dim } => ConvexDomain::full_space(*dim),
        DomainSpec::Box { lower, upper } => ConvexDomain::box_(lower.clone(), upper.clone()),
        DomainSpec::Ball {
            center,
            radius,
            open,
        } => ConvexDomain::ball(center.clone(), *radius, *open),
        DomainSpec::Simplex { dim, face_eps } => ConvexDomain::simplex(*dim, *face_eps),
        DomainSpec::AffineSlice { c, b, lower, upper } => {
            if c.is_empty() {
                return Err(invalid("domain.c must have at least one row"));
            }
            ConvexDomain::affine_slice(Matrix::from_rows(c), b.clone(), lower.clone(), upper.clone())
        }
    };
    r.map_err(|e| invalid(format!("domain: {e}")))
}
