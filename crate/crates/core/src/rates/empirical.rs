//! Geometric decay estimated from traces.

use crate::error::{Result, SurroError};
use crate::linalg;
use crate::surrogate::{Surrogate, Trace};

/// Analysis window for decay estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateWindow {
    /// Fraction of the usable prefix discarded as transient (reduced when
    /// fewer than `min_points` would remain).
    pub burn_in: f64,
    /// Values at or below `floor_rel · scale` are treated as converged.
    pub floor_rel: f64,
    pub min_points: usize,
}

impl Default for RateWindow {
    fn default() -> Self {
        Self {
            burn_in: 0.3,
            floor_rel: 1e-12,
            min_points: 10,
        }
    }
}

impl RateWindow {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.burn_in) || !(self.floor_rel > 0.0) || self.min_points < 2 {
            return Err(SurroError::InvalidArgument(
                "rate window needs burn_in in [0, 1), floor_rel > 0, min_points >= 2".into(),
            ));
        }
        Ok(())
    }
}

/// Least-squares decay of a positive sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayEstimate {
    /// Slope of `log x_n` against `n`; `−∞` when the sequence is at the floor
    /// from the start.
    pub slope: f64,
    /// Median of `x_{n+1}/x_n` over the window.
    pub successive_ratio: f64,
    /// First and one-past-last index of the window.
    pub start: usize,
    pub end: usize,
    /// Set when the sequence dropped below the floor too quickly for a full
    /// window; the slope then uses every point above the floor plus the first
    /// point below it, clamped to the floor, and only bounds the true rate.
    pub superlinear: bool,
}

impl DecayEstimate {
    pub fn rate(&self) -> f64 {
        self.slope.exp()
    }

    pub fn points(&self) -> usize {
        self.end - self.start
    }
}

/// Decay of `values` with floor `floor`.
pub fn decay_estimate(values: &[f64], floor: f64, window: &RateWindow) -> Result<DecayEstimate> {
    window.validate()?;
    let cut = values.iter().position(|&v| !(v > floor));
    let prefix = &values[..cut.unwrap_or(values.len())];
    // Burn-in is shortened when needed to keep `min_points` in the window.
    let burn = (window.burn_in * prefix.len() as f64).ceil() as usize;
    let start = burn.min(prefix.len().saturating_sub(window.min_points));
    let usable = prefix.len() - start;
    if usable >= window.min_points {
        let idx: Vec<usize> = (start..prefix.len()).collect();
        return Ok(DecayEstimate {
            slope: log_slope(&idx, values, None),
            successive_ratio: median_ratio(&values[start..prefix.len()]),
            start,
            end: prefix.len(),
            superlinear: false,
        });
    }
    match cut {
        Some(0) => Ok(DecayEstimate {
            slope: f64::NEG_INFINITY,
            successive_ratio: 0.0,
            start: 0,
            end: 0,
            superlinear: true,
        }),
        Some(c) => {
            let idx: Vec<usize> = (0..=c).collect();
            let mut ratios: Vec<f64> = values[..=c].to_vec();
            ratios[c] = floor;
            Ok(DecayEstimate {
                slope: log_slope(&idx, values, Some((c, floor))),
                successive_ratio: median_ratio(&ratios),
                start: 0,
                end: c + 1,
                superlinear: true,
            })
        }
        None => Err(SurroError::WindowTooShort {
            usable,
            needed: window.min_points,
        }),
    }
}

/// Least-squares slope of `log values[i]` over `idx`, optionally replacing
/// one entry.
fn log_slope(idx: &[usize], values: &[f64], replace: Option<(usize, f64)>) -> f64 {
    let n = idx.len() as f64;
    let pts: Vec<(f64, f64)> = idx
        .iter()
        .map(|&i| {
            let v = match replace {
                Some((j, r)) if j == i => r,
                _ => values[i],
            };
            (i as f64, v.ln())
        })
        .collect();
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn median_ratio(v: &[f64]) -> f64 {
    let mut r: Vec<f64> = v.windows(2).map(|w| w[1] / w[0]).collect();
    if r.is_empty() {
        return f64::NAN;
    }
    r.sort_by(f64::total_cmp);
    let m = r.len();
    if m % 2 == 1 {
        r[m / 2]
    } else {
        0.5 * (r[m / 2 - 1] + r[m / 2])
    }
}

/// Decay of `‖θ_n − θ⋆‖₂` along the trace, floor `floor_rel·(1 + ‖θ⋆‖)`.
pub fn empirical_rate(trace: &Trace, theta_star: &[f64], window: &RateWindow) -> Result<DecayEstimate> {
    let errors = trace.errors(theta_star);
    let floor = window.floor_rel * (1.0 + linalg::norm2(theta_star));
    decay_estimate(&errors, floor, window)
}

/// `|Q_{θ_n}(θ_{n+1}) − Q_{θ⋆}(θ⋆)|` along the trace.
pub fn q_gaps(problem: &dyn Surrogate, trace: &Trace, theta_star: &[f64]) -> Result<(Vec<f64>, f64)> {
    let q_star = problem.value(theta_star, theta_star)?;
    Ok((trace.q_values.iter().map(|q| (q - q_star).abs()).collect(), q_star))
}

/// Decay of the surrogate-value gap, floor `floor_rel·(1 + |Q⋆|)`.
pub fn q_gap_rate(
    problem: &dyn Surrogate,
    trace: &Trace,
    theta_star: &[f64],
    window: &RateWindow,
) -> Result<DecayEstimate> {
    let (gaps, q_star) = q_gaps(problem, trace, theta_star)?;
    decay_estimate(&gaps, window.floor_rel * (1.0 + q_star.abs()), window)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_geometric_sequences() {
        for k in 1..10 {
            let r = k as f64 / 10.0;
            let v: Vec<f64> = (0..400).map(|n| r.powi(n)).collect();
            let e = decay_estimate(&v, 1e-12, &RateWindow::default()).unwrap();
            assert!(!e.superlinear);
            assert!((e.rate() - r).abs() <= 1e-6, "{r}: {}", e.rate());
            assert!((e.slope - r.ln()).abs() <= 1e-9);
            assert!((e.successive_ratio - r).abs() <= 1e-9);
        }
    }

    #[test]
    fn too_short_without_reaching_floor() {
        let v: Vec<f64> = (0..8).map(|n| 0.5f64.powi(n)).collect();
        assert!(matches!(
            decay_estimate(&v, 1e-12, &RateWindow::default()),
            Err(SurroError::WindowTooShort { .. })
        ));
    }

    #[test]
    fn fast_drop_is_flagged_superlinear() {
        let v = [1.0, 0.5, 0.143, 0.0055, 3.3e-7, 7e-20];
        let e = decay_estimate(&v, 1e-12, &RateWindow::default()).unwrap();
        assert!(e.superlinear);
        assert!(e.rate() < 0.05);
        let at_floor = decay_estimate(&[0.0, 0.0], 1e-12, &RateWindow::default()).unwrap();
        assert_eq!(at_floor.slope, f64::NEG_INFINITY);
    }
}
