use crate::error::{Result, SurroError};
use crate::linalg;
use crate::surrogate::{inner_minimize, ParamVector, Surrogate};

/// Termination rule for [`iterate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub max_iters: usize,
    pub residual_tol: f64,
    /// Steps without a new best residual (and without net progress) before
    /// declaring a stall.
    pub stall_window: usize,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            max_iters: 10_000,
            residual_tol: 1e-13,
            stall_window: 20,
        }
    }
}

impl StopRule {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || self.stall_window == 0 || !(self.residual_tol > 0.0) {
            return Err(SurroError::InvalidArgument(
                "stop rule needs max_iters >= 1, stall_window >= 1, residual_tol > 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIters,
    Stalled,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::MaxIters => "max_iters",
            Self::Stalled => "stalled",
        }
    }
}

/// Iterate sequence produced by [`iterate`].
///
/// `q_values[n] = Q_{θ_n}(θ_{n+1})` and `residuals[n] = ‖θ_{n+1} − θ_n‖₂`,
/// so both have one entry fewer than `iterates`. A step whose residual is
/// already below tolerance is not appended.
#[derive(Debug, Clone)]
pub struct Trace {
    pub iterates: Vec<ParamVector>,
    /// `ζ_{n+1}` for each recorded step, when the problem exposes one.
    pub aux_iterates: Option<Vec<ParamVector>>,
    pub q_values: Vec<f64>,
    pub residuals: Vec<f64>,
    pub stop_reason: StopReason,
    /// `ϑ(θ_n)` along the trace when the problem supplies a Lyapunov function.
    pub lyapunov: Option<Vec<f64>>,
    /// Largest `Q_{θ_n}(θ_{n+1}) − Q_{θ_n}(θ_n)` observed (≤ 0 up to
    /// rounding for an exact argmin).
    pub max_surrogate_increase: f64,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.iterates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterates.is_empty()
    }

    pub fn last(&self) -> &ParamVector {
        self.iterates.last().expect("trace has at least θ0")
    }

    /// `‖θ_n − θ⋆‖₂` for every iterate.
    pub fn errors(&self, theta_star: &[f64]) -> Vec<f64> {
        self.iterates
            .iter()
            .map(|t| linalg::dist2(t, theta_star))
            .collect()
    }

    /// Largest `ϑ(θ_{n+1}) − ϑ(θ_n)`, if a Lyapunov function was tracked.
    pub fn max_lyapunov_increase(&self) -> Option<f64> {
        self.lyapunov.as_ref().map(|l| {
            l.windows(2)
                .map(|w| w[1] - w[0])
                .fold(f64::NEG_INFINITY, f64::max)
        })
    }
}

/// Over the last `window` steps, the net displacement is under half the
/// path length: the iterates are oscillating rather than travelling. Long
/// runs of growing steps (leaving a region of strong curvature, say) are
/// not a stall.
fn wandering(iterates: &[ParamVector], residuals: &[f64], window: usize) -> bool {
    let n = iterates.len();
    let path: f64 = residuals[residuals.len() - window..].iter().sum();
    linalg::dist2(&iterates[n - 1], &iterates[n - 1 - window]) < 0.5 * path
}

/// Runs `θ_{n+1} = M(θ_n)` from `theta0` until the stop rule fires.
pub fn iterate(problem: &dyn Surrogate, theta0: &ParamVector, stop: &StopRule) -> Result<Trace> {
    stop.validate()?;
    let domain = problem.domain();
    if theta0.dim() != domain.dim() {
        return Err(SurroError::DimensionMismatch {
            expected: domain.dim(),
            got: theta0.dim(),
        });
    }
    if !domain.contains(theta0) {
        return Err(SurroError::InfeasibleInput(format!(
            "θ0 = {:?} is outside the domain",
            theta0.coords()
        )));
    }

    let mut iterates = vec![theta0.clone()];
    let mut aux: Option<Vec<ParamVector>> = None;
    let mut q_values = Vec::new();
    let mut residuals = Vec::new();
    let mut lyapunov = problem.lyapunov(theta0).map(|v| vec![v]);
    let mut max_increase = f64::NEG_INFINITY;
    let mut best_residual = f64::INFINITY;
    let mut best_index = 0usize;
    let mut reason = StopReason::MaxIters;

    for n in 0..stop.max_iters {
        let current = iterates.last().expect("non-empty").clone();
        let wrap = |e: SurroError| SurroError::IterationFailed {
            index: n,
            source: Box::new(e),
        };
        let next = inner_minimize(problem, &current).map_err(wrap)?;
        let residual = linalg::dist2(&next, &current);
        if residual <= stop.residual_tol {
            reason = StopReason::Converged;
            break;
        }
        if let Some(z) = problem.aux_point(&current) {
            aux.get_or_insert_with(Vec::new)
                .push(ParamVector::from(z.map_err(wrap)?));
        }
        let q_next = problem.value(&current, &next).map_err(wrap)?;
        let q_here = problem.value(&current, &current).map_err(wrap)?;
        max_increase = max_increase.max(q_next - q_here);
        q_values.push(q_next);
        residuals.push(residual);
        if let (Some(l), Some(v)) = (lyapunov.as_mut(), problem.lyapunov(&next)) {
            l.push(v);
        }
        iterates.push(next);

        if residual < best_residual {
            best_residual = residual;
            best_index = n;
        } else if n - best_index >= stop.stall_window && wandering(&iterates, &residuals, stop.stall_window) {
            reason = StopReason::Stalled;
            break;
        }
    }

    Ok(Trace {
        iterates,
        aux_iterates: aux,
        q_values,
        residuals,
        stop_reason: reason,
        lyapunov,
        max_surrogate_increase: max_increase,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surrogate::{ConvexDomain, FnSurrogate};

    /// `Q_θ(θ′) = ½(θ′ − m(θ))²`, so the step is `m(θ)`.
    fn map_problem(m: fn(f64) -> f64) -> FnSurrogate {
        FnSurrogate::new(
            "map",
            ConvexDomain::full_space(1).unwrap(),
            move |t, tn| Ok(0.5 * (tn[0] - m(t[0])).powi(2)),
            move |t, tn| Ok(vec![tn[0] - m(t[0])]),
        )
        .with_closed_form(move |t| Ok(vec![m(t[0])]))
    }

    #[test]
    fn oscillation_is_a_stall() {
        let p = map_problem(|t| -t);
        let tr = iterate(&p, &ParamVector::scalar(1.0), &StopRule::default()).unwrap();
        assert_eq!(tr.stop_reason, StopReason::Stalled);
        assert_eq!(tr.len(), 22);
    }

    #[test]
    fn growing_steps_are_not_a_stall() {
        // Steps grow steadily until the iterate lands on 1.
        let p = map_problem(|t| (t + 1e-3 * 1.1f64.powf(t * 100.0)).min(1.0));
        let tr = iterate(&p, &ParamVector::scalar(0.0), &StopRule::default()).unwrap();
        assert_eq!(tr.stop_reason, StopReason::Converged);
        assert!((tr.last()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn converges_and_respects_the_cap() {
        let p = map_problem(|t| 0.5 * t);
        let tr = iterate(&p, &ParamVector::scalar(1.0), &StopRule::default()).unwrap();
        assert_eq!(tr.stop_reason, StopReason::Converged);
        assert_eq!(tr.residuals.len(), tr.iterates.len() - 1);
        let capped = StopRule {
            max_iters: 5,
            ..StopRule::default()
        };
        let tr = iterate(&p, &ParamVector::scalar(1.0), &capped).unwrap();
        assert_eq!(tr.stop_reason, StopReason::MaxIters);
        assert_eq!(tr.len(), 6);
        assert!(iterate(&p, &ParamVector::scalar(1.0), &StopRule { max_iters: 0, ..capped }).is_err());
    }
}
