//! Convex feasible sets and their Euclidean projections.

use crate::error::{Result, SurroError};
use crate::linalg::{self, Matrix, SymMatrix};
use crate::rng::{self, SurroRng};

/// Slack used by membership tests.
pub const MEMBERSHIP_SLACK: f64 = 1e-12;
/// Relative margin keeping projections strictly inside open sets.
pub const INTERIOR_MARGIN: f64 = 1e-9;

const DYKSTRA_MAX_ITERS: usize = 100_000;

/// Convex feasible set `Θ`.
///
/// Build through the checked constructors; they enforce the per-variant
/// invariants (ordered box bounds, positive radius, independent rows).
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexDomain {
    FullSpace {
        dim: usize,
    },
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    EuclideanBall {
        center: Vec<f64>,
        radius: f64,
        open: bool,
    },
    /// `{x : x_i ≥ face_eps, Σ x_i = 1}`.
    Simplex {
        dim: usize,
        face_eps: f64,
    },
    /// `{x : Cx = b} ∩ Box(lower, upper)`.
    AffineSlice {
        c: Matrix,
        b: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
}

impl ConvexDomain {
    pub fn full_space(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(SurroError::InvalidDomain("dimension must be >= 1".into()));
        }
        Ok(Self::FullSpace { dim })
    }

    pub fn box_(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_box(&lower, &upper)?;
        Ok(Self::Box { lower, upper })
    }

    pub fn ball(center: Vec<f64>, radius: f64, open: bool) -> Result<Self> {
        if center.is_empty() {
            return Err(SurroError::InvalidDomain("dimension must be >= 1".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(SurroError::InvalidDomain(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(Self::EuclideanBall {
            center,
            radius,
            open,
        })
    }

    pub fn simplex(dim: usize, face_eps: f64) -> Result<Self> {
        if dim < 1 {
            return Err(SurroError::InvalidDomain("dimension must be >= 1".into()));
        }
        if !(0.0..1.0 / dim as f64).contains(&face_eps) {
            return Err(SurroError::InvalidDomain(format!(
                "face epsilon {face_eps} must lie in [0, 1/q)"
            )));
        }
        Ok(Self::Simplex { dim, face_eps })
    }

    pub fn affine_slice(c: Matrix, b: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_box(&lower, &upper)?;
        if c.cols() != lower.len() || c.rows() != b.len() || c.rows() == 0 {
            return Err(SurroError::InvalidDomain(
                "affine slice: C must be m x q with m = len(b) >= 1".into(),
            ));
        }
        let gram = SymMatrix::new(c.matmul(&c.transpose()));
        if linalg::positive_definite_spectrum(&gram).is_err() {
            return Err(SurroError::InvalidDomain(
                "affine slice: rows of C are linearly dependent".into(),
            ));
        }
        Ok(Self::AffineSlice { c, b, lower, upper })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::FullSpace { dim } | Self::Simplex { dim, .. } => *dim,
            Self::Box { lower, .. } | Self::AffineSlice { lower, .. } => lower.len(),
            Self::EuclideanBall { center, .. } => center.len(),
        }
    }

    /// Whether the set has non-empty interior in `R^q`.
    pub fn is_full_dimensional(&self) -> bool {
        !matches!(self, Self::Simplex { .. } | Self::AffineSlice { .. })
    }

    /// Membership up to [`MEMBERSHIP_SLACK`].
    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        let s = MEMBERSHIP_SLACK;
        match self {
            Self::FullSpace { .. } => true,
            Self::Box { lower, upper } => in_box(x, lower, upper, s),
            Self::EuclideanBall { center, radius, .. } => {
                linalg::dist2(x, center) <= radius + s
            }
            Self::Simplex { face_eps, .. } => {
                x.iter().all(|&v| v >= face_eps - s) && (x.iter().sum::<f64>() - 1.0).abs() <= s
            }
            Self::AffineSlice { c, b, lower, upper } => {
                in_box(x, lower, upper, s)
                    && c
                        .matvec(x)
                        .iter()
                        .zip(b)
                        .all(|(cx, bi)| (cx - bi).abs() <= s * (1.0 + bi.abs()))
            }
        }
    }

    /// Strict relative-interior membership (margin [`INTERIOR_MARGIN`]).
    pub fn in_relative_interior(&self, x: &[f64]) -> bool {
        if !self.contains(x) {
            return false;
        }
        let m = INTERIOR_MARGIN;
        match self {
            Self::FullSpace { .. } => true,
            Self::Box { lower, upper } | Self::AffineSlice { lower, upper, .. } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(&v, (&l, &u))| v > l + m * (1.0 + l.abs()) && v < u - m * (1.0 + u.abs())),
            Self::EuclideanBall { center, radius, .. } => {
                linalg::dist2(x, center) < radius * (1.0 - m)
            }
            Self::Simplex { face_eps, .. } => x.iter().all(|&v| v > face_eps + m),
        }
    }

    /// Euclidean projection onto the set. Open balls are shrunk by the
    /// interior margin so projected points stay strictly inside.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Self::FullSpace { .. } => x.to_vec(),
            Self::Box { lower, upper } => clamp_box(x, lower, upper),
            Self::EuclideanBall {
                center,
                radius,
                open,
            } => {
                let r = if *open {
                    radius * (1.0 - INTERIOR_MARGIN)
                } else {
                    *radius
                };
                let d = linalg::sub(x, center);
                let n = linalg::norm2(&d);
                if n <= r {
                    x.to_vec()
                } else {
                    linalg::axpy(center, r / n, &d)
                }
            }
            Self::Simplex { dim, face_eps } => {
                let mass = 1.0 - *dim as f64 * face_eps;
                let shifted: Vec<f64> = x.iter().map(|v| v - face_eps).collect();
                project_scaled_simplex(&shifted, mass)
                    .into_iter()
                    .map(|v| v + face_eps)
                    .collect()
            }
            Self::AffineSlice { c, b, lower, upper } => dykstra(x, c, b, lower, upper),
        }
    }

    /// Orthonormal basis (as columns) of the direction space
    /// `span{θ − θ′ : θ, θ′ ∈ Θ}`.
    pub fn direction_basis(&self) -> Result<Matrix> {
        let q = self.dim();
        match self {
            Self::FullSpace { .. } | Self::Box { .. } | Self::EuclideanBall { .. } => {
                Ok(Matrix::identity(q))
            }
            Self::Simplex { .. } => null_space(&Matrix::from_rows(&[vec![1.0; q]])),
            Self::AffineSlice { c, .. } => null_space(c),
        }
    }

    /// Random feasible point: Gaussian for unbounded sets, uniform for
    /// boxes and balls, flat Dirichlet for simplices.
    pub fn sample(&self, rng: &mut SurroRng) -> Vec<f64> {
        match self {
            Self::FullSpace { dim } => rng::normal_vec(rng, *dim),
            Self::Box { lower, upper } => sample_box(rng, lower, upper),
            Self::EuclideanBall { center, radius, .. } => {
                let q = center.len();
                let dir = rng::unit_vector(rng, q);
                let r = radius * rng::open_uniform(rng).powf(1.0 / q as f64) * (1.0 - 1e-6);
                linalg::axpy(center, r, &dir)
            }
            Self::Simplex { dim, face_eps } => {
                let e: Vec<f64> = (0..*dim).map(|_| -rng::open_uniform(rng).ln()).collect();
                let s: f64 = e.iter().sum();
                let mass = 1.0 - *dim as f64 * face_eps;
                e.iter().map(|v| face_eps + mass * v / s).collect()
            }
            Self::AffineSlice { lower, upper, .. } => {
                let x = sample_box(rng, lower, upper);
                self.project(&x)
            }
        }
    }
}

fn check_box(lower: &[f64], upper: &[f64]) -> Result<()> {
    if lower.is_empty() || lower.len() != upper.len() {
        return Err(SurroError::InvalidDomain(
            "box bounds must be non-empty and of equal length".into(),
        ));
    }
    for (i, (l, u)) in lower.iter().zip(upper).enumerate() {
        if l.is_nan() || u.is_nan() || !(l < u) {
            return Err(SurroError::InvalidDomain(format!(
                "box bound {i}: lower {l} must be < upper {u}"
            )));
        }
    }
    Ok(())
}

fn in_box(x: &[f64], lower: &[f64], upper: &[f64], slack: f64) -> bool {
    x.iter()
        .zip(lower.iter().zip(upper))
        .all(|(&v, (&l, &u))| v >= l - slack && v <= u + slack)
}

fn clamp_box(x: &[f64], lower: &[f64], upper: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(lower.iter().zip(upper))
        .map(|(&v, (&l, &u))| v.clamp(l, u))
        .collect()
}

fn sample_box(rng: &mut SurroRng, lower: &[f64], upper: &[f64]) -> Vec<f64> {
    lower
        .iter()
        .zip(upper)
        .map(|(&l, &u)| match (l.is_finite(), u.is_finite()) {
            (true, true) => l + (u - l) * rng::open_uniform(rng),
            (true, false) => l - rng::open_uniform(rng).ln(),
            (false, true) => u + rng::open_uniform(rng).ln(),
            (false, false) => rng::standard_normal(rng),
        })
        .collect()
}

/// Projection onto `{x ≥ 0, Σx = mass}` (sort-and-threshold).
fn project_scaled_simplex(x: &[f64], mass: f64) -> Vec<f64> {
    let mut u = x.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cumsum += ui;
        let t = (cumsum - mass) / (i + 1) as f64;
        if ui - t > 0.0 {
            tau = t;
        }
    }
    let mut y: Vec<f64> = x.iter().map(|v| (v - tau).max(0.0)).collect();
    // Restore the exact mass lost to rounding on the active coordinates.
    let s: f64 = y.iter().sum();
    if s > 0.0 {
        let err = mass - s;
        let active = y.iter().filter(|v| **v > 0.0).count() as f64;
        for v in y.iter_mut().filter(|v| **v > 0.0) {
            *v += err / active;
        }
    }
    y
}

fn project_affine(x: &[f64], c: &Matrix, b: &[f64]) -> Vec<f64> {
    let resid = linalg::sub(&c.matvec(x), b);
    let gram = SymMatrix::new(c.matmul(&c.transpose()));
    let lambda = linalg::solve_symmetric(&gram, &resid).expect("independent rows");
    linalg::sub(x, &c.transpose().matvec(&lambda))
}

/// Dykstra's alternating projections onto `{Cx = b}` and the box.
fn dykstra(x: &[f64], c: &Matrix, b: &[f64], lower: &[f64], upper: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut y = x.to_vec();
    let mut p = vec![0.0; n];
    let mut qv = vec![0.0; n];
    for _ in 0..DYKSTRA_MAX_ITERS {
        let a = project_affine(&linalg::add(&y, &p), c, b);
        p = linalg::sub(&linalg::add(&y, &p), &a);
        let y_new = clamp_box(&linalg::add(&a, &qv), lower, upper);
        qv = linalg::sub(&linalg::add(&a, &qv), &y_new);
        let change = linalg::dist2(&y_new, &y);
        y = y_new;
        if change <= 1e-16 * (1.0 + linalg::norm2(&y)) {
            break;
        }
    }
    y
}

/// Orthonormal basis of `null(C)`, columns sign-normalized so the first
/// non-negligible entry is positive.
fn null_space(c: &Matrix) -> Result<Matrix> {
    let gram = SymMatrix::new(c.transpose().matmul(c));
    let spec = linalg::eigh(&gram)?;
    let tol = 1e-12 * spec.max_abs().max(1.0);
    let mut cols = Vec::new();
    for (j, &l) in spec.values.iter().enumerate() {
        if l.abs() <= tol {
            let mut v = spec.vectors.column(j);
            if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
                if *first < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
            }
            cols.push(v);
        }
    }
    if cols.is_empty() {
        return Err(SurroError::DegenerateDomain);
    }
    Ok(Matrix::from_columns(&cols))
}
