//! Comparison of predicted and measured rates.

use std::collections::BTreeMap;

use crate::error::{Result, SurroError};
use crate::linalg::{self, RatePair, SymMatrix};
use crate::rates::curvature::{theoretical_rates, CurvatureFrame};
use crate::rates::empirical::{empirical_rate, q_gap_rate, DecayEstimate, RateWindow};
use crate::surrogate::{Surrogate, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inapplicable,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Pass => "pass",
            Self::Fail => "fail",
            Self::Inapplicable => "inapplicable",
        }
    }

    fn from_bool(ok: bool) -> Self {
        if ok {
            Self::Pass
        } else {
            Self::Fail
        }
    }
}

pub const UPPER_BOUND: &str = "theorem1_upper";
pub const LOWER_BOUND: &str = "theorem2_lower";
pub const EXACT_RATE: &str = "theorem3_exact";
pub const Q_GAP: &str = "corollary1_q_gap";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerdictOptions {
    pub tol_rate: f64,
    pub window: RateWindow,
}

impl Default for VerdictOptions {
    fn default() -> Self {
        Self {
            tol_rate: 0.02,
            window: RateWindow::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub theory: RatePair,
    /// Error decay; `None` when the window was too short.
    pub empirical: Option<DecayEstimate>,
    pub q_gap: Option<DecayEstimate>,
    pub theta_star_interior: bool,
    pub verdicts: BTreeMap<&'static str, Verdict>,
    pub warnings: Vec<String>,
}

impl RateReport {
    /// `exp(slope)` of the error decay (0 for `slope = −∞`).
    pub fn empirical_rate(&self) -> Option<f64> {
        self.empirical.map(|e| e.rate())
    }

    pub fn successive_ratio(&self) -> Option<f64> {
        self.empirical.map(|e| e.successive_ratio)
    }

    pub fn q_gap_slope(&self) -> Option<f64> {
        self.q_gap.map(|e| e.slope)
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts.values().all(|v| *v != Verdict::Fail)
    }
}

/// Measures the trace against the rates predicted by `frame`.
/// Absolute slack on `ρ̄² ≤ ρ̲`, so that curvature roundoff (a finite-difference
/// `ρ̄` of order 1e-8 with `ρ̲` snapped to zero) does not hide the zero-rate case.
const EXACT_SLACK: f64 = 1e-12;

pub fn verdicts(
    problem: &dyn Surrogate,
    trace: &Trace,
    theta_star: &[f64],
    frame: &CurvatureFrame,
    opts: &VerdictOptions,
) -> Result<RateReport> {
    let theory = theoretical_rates(frame)?;
    let tol = opts.tol_rate;
    let mut warnings = Vec::new();
    if !frame.h4_pass {
        warnings.push("sampled directions violate A > |B| on the direction space".into());
    }

    let empirical = match empirical_rate(trace, theta_star, &opts.window) {
        Ok(e) => Some(e),
        Err(SurroError::WindowTooShort { usable, needed }) => {
            warnings.push(format!(
                "error window too short ({usable} usable points, {needed} needed)"
            ));
            None
        }
        Err(e) => return Err(e),
    };
    let q_gap = match q_gap_rate(problem, trace, theta_star, &opts.window) {
        Ok(e) => Some(e),
        Err(SurroError::WindowTooShort { usable, needed }) => {
            warnings.push(format!(
                "surrogate-gap window too short ({usable} usable points, {needed} needed)"
            ));
            None
        }
        Err(e) => return Err(e),
    };
    if let Some(e) = &empirical {
        if !e.superlinear {
            if let Some(w) = coverage_warning(trace, theta_star, frame, e)? {
                warnings.push(w);
            }
        }
    }

    let interior = problem.domain().in_relative_interior(theta_star);
    let rate = empirical.map(|e| e.rate());
    let mut v = BTreeMap::new();
    v.insert(
        UPPER_BOUND,
        rate.map_or(Verdict::Inapplicable, |r| Verdict::from_bool(r <= theory.rho_sup + tol)),
    );
    v.insert(
        LOWER_BOUND,
        match rate {
            Some(r) if interior => Verdict::from_bool(r >= theory.rho_inf - tol),
            _ => Verdict::Inapplicable,
        },
    );
    v.insert(
        EXACT_RATE,
        match rate {
            Some(r) if theory.rho_sup * theory.rho_sup <= theory.rho_inf + EXACT_SLACK => {
                Verdict::from_bool((r - theory.rho_sup).abs() <= tol)
            }
            _ => Verdict::Inapplicable,
        },
    );
    v.insert(
        Q_GAP,
        q_gap.map_or(Verdict::Inapplicable, |q| {
            Verdict::from_bool(q.rate() <= theory.rho_sup + tol)
        }),
    );
    Ok(RateReport {
        theory,
        empirical,
        q_gap,
        theta_star_interior: interior,
        verdicts: v,
        warnings,
    })
}

/// Warns when the windowed errors `Pᵀ(θ_n − θ⋆)` span fewer than `d`
/// dimensions, in which case the trace only sees part of the spectrum.
fn coverage_warning(
    trace: &Trace,
    theta_star: &[f64],
    frame: &CurvatureFrame,
    window: &DecayEstimate,
) -> Result<Option<String>> {
    let d = frame.reduced_dim();
    let pt = frame.p.transpose();
    let mut gram = linalg::Matrix::zeros(d, d);
    for it in &trace.iterates[window.start..window.end] {
        let r = pt.matvec(&linalg::sub(it, theta_star));
        let n = linalg::norm2(&r);
        if n == 0.0 {
            continue;
        }
        for i in 0..d {
            for j in 0..d {
                gram[(i, j)] += r[i] * r[j] / (n * n);
            }
        }
    }
    let spec = linalg::eigh(&SymMatrix::new(gram))?;
    let rank = spec
        .values
        .iter()
        .filter(|&&l| l > 1e-8 * spec.max_abs().max(f64::MIN_POSITIVE))
        .count();
    Ok((rank < d).then(|| {
        format!("errors in the analysis window span {rank} of {d} directions; the exact-rate check may not see the full spectrum")
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{em_population_problem, gradient_descent_problem, newton_problem};
    use crate::models::{GaussianLatentModel, Objective};
    use crate::rates::curvature::{curvature_at, FdSpec};
    use crate::surrogate::{iterate, ConvexDomain, ParamVector, StopRule};

    fn gd(diag: &[f64], eta: f64, theta0: Vec<f64>) -> RateReport {
        let f = Objective::quadratic_at_origin(SymMatrix::from_diag(diag)).unwrap();
        let p = gradient_descent_problem(f, eta, ConvexDomain::full_space(diag.len()).unwrap())
            .unwrap();
        let star = vec![0.0; diag.len()];
        let tr = iterate(&p, &ParamVector::from(theta0), &StopRule::default()).unwrap();
        let frame = curvature_at(&p, &star, &FdSpec::default()).unwrap();
        verdicts(&p, &tr, &star, &frame, &VerdictOptions::default()).unwrap()
    }

    #[test]
    fn gradient_descent_verdicts() {
        let r = gd(&[1.0, 4.0], 0.4, vec![1.0, 1.0]);
        assert!((r.empirical_rate().unwrap() - 0.6).abs() < 1e-3);
        assert!(r.all_pass());
        assert_eq!(r.verdicts[EXACT_RATE], Verdict::Pass);

        let r = gd(&[1.0, 1.5], 0.4, vec![1.0, 1.0]);
        assert!((r.theory.rho_inf - 0.4).abs() < 1e-12 && (r.theory.rho_sup - 0.6).abs() < 1e-12);
        assert_eq!(r.verdicts[EXACT_RATE], Verdict::Pass);
        assert!(r.all_pass());
    }

    #[test]
    fn single_direction_trace_warns() {
        // θ0 on one eigenvector: the trace never sees the other rate.
        let r = gd(&[1.0, 1.5], 0.4, vec![0.0, 1.0]);
        assert!(r.warnings.iter().any(|w| w.contains("span 1 of 2")));
        assert_eq!(r.verdicts[EXACT_RATE], Verdict::Fail);
    }

    #[test]
    fn newton_passes_with_zero_rate() {
        let p = newton_problem(Objective::Quartic1D).unwrap();
        let tr = iterate(&p, &ParamVector::scalar(1.0), &StopRule::default()).unwrap();
        let frame = curvature_at(&p, &[0.0], &FdSpec::default()).unwrap();
        let r = verdicts(&p, &tr, &[0.0], &frame, &VerdictOptions::default()).unwrap();
        assert!(r.empirical.unwrap().superlinear);
        assert!(r.empirical_rate().unwrap() < 0.05);
        assert_eq!(r.verdicts[EXACT_RATE], Verdict::Pass);
        assert!(r.all_pass());
    }

    #[test]
    fn population_em_verdicts() {
        let m = GaussianLatentModel::new(1.0, 1.0, 0.0).unwrap();
        let p = em_population_problem(m);
        let tr = iterate(&p, &ParamVector::scalar(3.0), &StopRule::default()).unwrap();
        let frame = curvature_at(&p, &[0.0], &FdSpec::default()).unwrap();
        let r = verdicts(&p, &tr, &[0.0], &frame, &VerdictOptions::default()).unwrap();
        assert!((r.empirical_rate().unwrap() - 0.5).abs() < 1e-6);
        assert!(r.verdicts.values().all(|v| *v == Verdict::Pass));
    }
}
