use std::fmt;
use std::sync::Arc;

use crate::error::{Result, SurroError};
use crate::linalg::{self, SymMatrix};

type ValueFn = Arc<dyn Fn(&[f64]) -> Result<f64> + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync>;
type HessFn = Arc<dyn Fn(&[f64]) -> Result<SymMatrix> + Send + Sync>;

/// User-supplied smooth objective.
#[derive(Clone)]
pub struct CustomObjective {
    pub dim: usize,
    pub value: ValueFn,
    pub grad: GradFn,
    pub hess: HessFn,
    pub beta: Option<f64>,
}

impl fmt::Debug for CustomObjective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomObjective")
            .field("dim", &self.dim)
            .field("beta", &self.beta)
            .finish_non_exhaustive()
    }
}

/// Smooth objective `f` with first and second derivatives.
#[derive(Debug, Clone)]
pub enum Objective {
    /// `½(x − c)ᵀH(x − c)`.
    QuadraticForm { h: SymMatrix, center: Vec<f64> },
    /// `s·log Σ_i (e^{u_i} + e^{−u_i})` with `u = (x − c)/s`: convex,
    /// `(1/s)`-smooth, minimized at `c`.
    SmoothLogSumExp { scale: f64, center: Vec<f64> },
    /// `x⁴/4 + x²/2` on `R`.
    Quartic1D,
    Custom(CustomObjective),
}

impl Objective {
    pub fn quadratic(h: SymMatrix, center: Vec<f64>) -> Result<Self> {
        if h.dim() != center.len() {
            return Err(SurroError::DimensionMismatch {
                expected: h.dim(),
                got: center.len(),
            });
        }
        linalg::positive_definite_spectrum(&h)?;
        Ok(Self::QuadraticForm { h, center })
    }

    /// `½xᵀHx`.
    pub fn quadratic_at_origin(h: SymMatrix) -> Result<Self> {
        let q = h.dim();
        Self::quadratic(h, vec![0.0; q])
    }

    pub fn smooth_log_sum_exp(scale: f64, center: Vec<f64>) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) || center.is_empty() {
            return Err(SurroError::InvalidArgument(
                "log-sum-exp needs scale > 0 and a non-empty center".into(),
            ));
        }
        Ok(Self::SmoothLogSumExp { scale, center })
    }

    pub fn custom(
        dim: usize,
        value: impl Fn(&[f64]) -> Result<f64> + Send + Sync + 'static,
        grad: impl Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
        hess: impl Fn(&[f64]) -> Result<SymMatrix> + Send + Sync + 'static,
        beta: Option<f64>,
    ) -> Self {
        Self::Custom(CustomObjective {
            dim,
            value: Arc::new(value),
            grad: Arc::new(grad),
            hess: Arc::new(hess),
            beta,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::QuadraticForm { center, .. } | Self::SmoothLogSumExp { center, .. } => {
                center.len()
            }
            Self::Quartic1D => 1,
            Self::Custom(c) => c.dim,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::QuadraticForm { .. } => "quadratic",
            Self::SmoothLogSumExp { .. } => "log_sum_exp",
            Self::Quartic1D => "quartic1d",
            Self::Custom(_) => "custom",
        }
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(SurroError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        match self {
            Self::QuadraticForm { h, center } => Ok(0.5 * h.quad_form(&linalg::sub(x, center))),
            Self::SmoothLogSumExp { scale, center } => {
                let u = scaled(x, center, *scale);
                let m = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                let z: f64 = u.iter().map(|v| (v - m).exp() + (-v - m).exp()).sum();
                Ok(scale * (m + z.ln()))
            }
            Self::Quartic1D => {
                let t = x[0];
                Ok(0.25 * t.powi(4) + 0.5 * t * t)
            }
            Self::Custom(c) => (c.value)(x),
        }
    }

    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        match self {
            Self::QuadraticForm { h, center } => Ok(h.as_matrix().matvec(&linalg::sub(x, center))),
            Self::SmoothLogSumExp { scale, center } => {
                let (sh, _ch, z) = lse_parts(x, center, *scale);
                Ok(sh.iter().map(|s| 2.0 * s / z).collect())
            }
            Self::Quartic1D => {
                let t = x[0];
                Ok(vec![t.powi(3) + t])
            }
            Self::Custom(c) => (c.grad)(x),
        }
    }

    pub fn hess(&self, x: &[f64]) -> Result<SymMatrix> {
        self.check(x)?;
        match self {
            Self::QuadraticForm { h, .. } => Ok(h.clone()),
            Self::SmoothLogSumExp { scale, center } => {
                let (sh, ch, z) = lse_parts(x, center, *scale);
                let q = x.len();
                let mut m = linalg::Matrix::zeros(q, q);
                for i in 0..q {
                    for j in 0..q {
                        let diag = if i == j { 2.0 * ch[i] / z } else { 0.0 };
                        m[(i, j)] = (diag - 4.0 * sh[i] * sh[j] / (z * z)) / scale;
                    }
                }
                Ok(SymMatrix::new(m))
            }
            Self::Quartic1D => Ok(SymMatrix::scalar(3.0 * x[0] * x[0] + 1.0)),
            Self::Custom(c) => (c.hess)(x),
        }
    }

    /// Declared smoothness constant `β ≥ sup ‖∂²f‖₂`, when global.
    pub fn beta(&self) -> Option<f64> {
        match self {
            Self::QuadraticForm { h, .. } => linalg::eigh(h).ok().map(|s| s.max_abs()),
            Self::SmoothLogSumExp { scale, .. } => Some(1.0 / scale),
            Self::Quartic1D => None,
            Self::Custom(c) => c.beta,
        }
    }

    /// Known minimizer, when the objective has one in closed form.
    pub fn minimizer(&self) -> Option<Vec<f64>> {
        match self {
            Self::QuadraticForm { center, .. } | Self::SmoothLogSumExp { center, .. } => {
                Some(center.clone())
            }
            Self::Quartic1D => Some(vec![0.0]),
            Self::Custom(_) => None,
        }
    }
}

fn scaled(x: &[f64], center: &[f64], scale: f64) -> Vec<f64> {
    x.iter().zip(center).map(|(a, c)| (a - c) / scale).collect()
}

/// `(sinh(u_i)·e^{−m}, cosh(u_i)·e^{−m}, Σ 2cosh(u_j)·e^{−m})` with a common
/// shift `m = max|u|` so nothing overflows.
fn lse_parts(x: &[f64], center: &[f64], scale: f64) -> (Vec<f64>, Vec<f64>, f64) {
    let u = scaled(x, center, scale);
    let m = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut sh = Vec::with_capacity(u.len());
    let mut ch = Vec::with_capacity(u.len());
    for v in &u {
        let p = (v - m).exp();
        let n = (-v - m).exp();
        sh.push(0.5 * (p - n));
        ch.push(0.5 * (p + n));
    }
    let z = 2.0 * ch.iter().sum::<f64>();
    (sh, ch, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn objectives() -> Vec<Objective> {
        vec![
            Objective::quadratic(
                SymMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]),
                vec![0.3, -0.1],
            )
            .unwrap(),
            Objective::smooth_log_sum_exp(0.5, vec![0.3, -0.2]).unwrap(),
            Objective::smooth_log_sum_exp(0.05, vec![0.0, 0.0, 0.0]).unwrap(),
            Objective::Quartic1D,
        ]
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut r = rng::seeded(3, 0);
        let h = 1e-5;
        for f in objectives() {
            let q = f.dim();
            for _ in 0..100 {
                let x = rng::normal_vec(&mut r, q);
                let g = f.grad(&x).unwrap();
                let hm = f.hess(&x).unwrap();
                for i in 0..q {
                    let mut p = x.clone();
                    let mut m = x.clone();
                    p[i] += h;
                    m[i] -= h;
                    let fd = (f.value(&p).unwrap() - f.value(&m).unwrap()) / (2.0 * h);
                    assert!((fd - g[i]).abs() <= 1e-5 * (1.0 + g[i].abs()), "{f:?}");
                    let gp = f.grad(&p).unwrap();
                    let gm = f.grad(&m).unwrap();
                    for j in 0..q {
                        let fd = (gp[j] - gm[j]) / (2.0 * h);
                        let an = hm.get(j, i);
                        assert!((fd - an).abs() <= 1e-5 * (1.0 + an.abs()), "{f:?} {fd} {an}");
                    }
                }
            }
        }
    }

    #[test]
    fn declared_beta_bounds_the_hessian() {
        let mut r = rng::seeded(4, 0);
        for f in objectives() {
            let Some(beta) = f.beta() else { continue };
            for _ in 0..100 {
                let x = linalg::scale(&rng::normal_vec(&mut r, f.dim()), 2.0);
                let s = linalg::eigh(&f.hess(&x).unwrap()).unwrap();
                assert!(s.max_abs() <= beta * (1.0 + 1e-12));
                assert!(s.min() >= -1e-12);
            }
        }
    }

    #[test]
    fn log_sum_exp_is_stable_far_out() {
        let f = Objective::smooth_log_sum_exp(0.01, vec![0.0]).unwrap();
        let v = f.value(&[100.0]).unwrap();
        assert!((v - 100.0).abs() < 1e-9);
        assert!((f.grad(&[100.0]).unwrap()[0] - 1.0).abs() < 1e-12);
    }
}
