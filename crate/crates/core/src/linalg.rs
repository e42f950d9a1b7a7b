//! Dense small-dimension linear algebra.
//!
//! Everything here is sized for curvature matrices of a handful of
//! parameters (the eigensolver is a cyclic Jacobi method), so the routines
//! favour accuracy and simplicity over asymptotic speed.

use crate::error::{Result, SurroError};

/// Dense row-major real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from row vectors. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<f64>]) -> Self {
        let c = cols.len();
        let r = cols.first().map_or(0, Vec::len);
        let mut m = Self::zeros(r, c);
        for (j, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), r, "ragged columns");
            for i in 0..r {
                m[(i, j)] = col[i];
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "matvec shape mismatch");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    fn zip_with(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// `‖M − Mᵀ‖_max` for square matrices.
    pub fn asymmetry(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let mut m: f64 = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                m = m.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Symmetric matrix; symmetry is enforced at construction by averaging with
/// the transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    inner: Matrix,
}

impl SymMatrix {
    /// Symmetrizes `m` as `(M + Mᵀ)/2`. Panics when `m` is not square or empty.
    pub fn new(m: Matrix) -> Self {
        Self::with_asymmetry(m).0
    }

    /// Symmetrizes and also returns the pre-symmetrization `‖M − Mᵀ‖_max`.
    pub fn with_asymmetry(m: Matrix) -> (Self, f64) {
        assert_eq!(m.rows, m.cols, "symmetric matrix must be square");
        assert!(m.rows >= 1, "symmetric matrix must have dim >= 1");
        let asym = m.asymmetry();
        let n = m.rows;
        let mut s = m;
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (s[(i, j)] + s[(j, i)]);
                s[(i, j)] = avg;
                s[(j, i)] = avg;
            }
        }
        (Self { inner: s }, asym)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        Self::new(Matrix::from_rows(rows))
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        Self::new(Matrix::from_diag(diag))
    }

    pub fn identity(n: usize) -> Self {
        Self::new(Matrix::identity(n))
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(Matrix::zeros(n, n))
    }

    pub fn scalar(x: f64) -> Self {
        Self::from_diag(&[x])
    }

    pub fn dim(&self) -> usize {
        self.inner.rows
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.inner
    }

    pub fn into_matrix(self) -> Matrix {
        self.inner
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner[(i, j)]
    }

    /// Congruence `Pᵀ S P`.
    pub fn congruence(&self, p: &Matrix) -> SymMatrix {
        SymMatrix::new(p.transpose().matmul(&self.inner).matmul(p))
    }

    pub fn quad_form(&self, v: &[f64]) -> f64 {
        dot(v, &self.inner.matvec(v))
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix::new(self.inner.add(&other.inner))
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix::new(self.inner.sub(&other.inner))
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        SymMatrix::new(self.inner.scale(s))
    }
}

/// Eigendecomposition of a symmetric matrix: ascending eigenvalues, with
/// column `i` of `vectors` paired with `values[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl Spectrum {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().expect("non-empty spectrum")
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn min_abs(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()))
    }

    /// `V · diag(g(λ)) · Vᵀ`.
    pub fn map(&self, g: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let gj = g(self.values[j]);
            for i in 0..n {
                scaled[(i, j)] *= gj;
            }
        }
        SymMatrix::new(scaled.matmul(&self.vectors.transpose()))
    }
}

/// Lower and upper generalized rates `inf/sup |vᵀBv| / vᵀAv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePair {
    pub rho_inf: f64,
    pub rho_sup: f64,
}

impl RatePair {
    pub fn new(rho_inf: f64, rho_sup: f64) -> Self {
        debug_assert!(0.0 <= rho_inf && rho_inf <= rho_sup + 1e-15);
        Self { rho_inf, rho_sup }
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_REL_TOL: f64 = 1e-12;

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn eigh(s: &SymMatrix) -> Result<Spectrum> {
    let n = s.dim();
    let mut a = s.as_matrix().clone();
    let mut v = Matrix::identity(n);
    let scale = a.frobenius();
    let threshold = JACOBI_REL_TOL * scale;

    let off = |a: &Matrix| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    acc += a[(i, j)] * a[(i, j)];
                }
            }
        }
        acc.sqrt()
    };

    let mut converged = off(&a) <= threshold;
    let mut sweeps = 0;
    while !converged && sweeps < JACOBI_MAX_SWEEPS {
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                // Rotation (c, s) annihilating a[p][q].
                let tau = (aqq - app) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let t = if tau == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
        converged = off(&a) <= threshold;
    }
    if !converged {
        return Err(SurroError::InternalNumericalFailure(format!(
            "Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, dst)] = v[(k, src)];
        }
    }
    Ok(Spectrum { values, vectors })
}

/// Checks positive-definiteness by eigenvalue threshold
/// `λ_min > dim · 1e-12 · max|λ|`, returning the spectrum on success.
pub fn positive_definite_spectrum(s: &SymMatrix) -> Result<Spectrum> {
    let spec = eigh(s)?;
    let threshold = s.dim() as f64 * 1e-12 * spec.max_abs();
    if spec.min() > threshold && spec.min() > 0.0 {
        Ok(spec)
    } else {
        Err(SurroError::NotPositiveDefinite {
            min_eigenvalue: spec.min(),
        })
    }
}

/// Symmetric inverse square root `S^{-1/2}` of a positive-definite matrix.
pub fn inv_sqrt(s: &SymMatrix) -> Result<SymMatrix> {
    let spec = positive_definite_spectrum(s)?;
    Ok(spec.map(|l| 1.0 / l.sqrt()))
}

/// Spectral norm `√λ_max(MᵀM)`.
pub fn spectral_norm(m: &Matrix) -> f64 {
    if m.max_abs() == 0.0 {
        return 0.0;
    }
    let gram = SymMatrix::new(m.transpose().matmul(m));
    match eigh(&gram) {
        Ok(spec) => spec.max().max(0.0).sqrt(),
        // The Gram matrix is symmetric PSD; Jacobi failure here would be a bug.
        Err(_) => f64::NAN,
    }
}

/// `A^{-1/2} B A^{-1/2}` as a symmetric matrix.
pub fn whitened(a: &SymMatrix, b: &SymMatrix) -> Result<SymMatrix> {
    if a.dim() != b.dim() {
        return Err(SurroError::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let r = inv_sqrt(a)?;
    Ok(SymMatrix::new(
        r.as_matrix().matmul(b.as_matrix()).matmul(r.as_matrix()),
    ))
}

/// Relative threshold below which the smallest absolute generalized
/// eigenvalue is treated as zero.
pub const SINGULAR_REL_TOL: f64 = 1e-12;

/// The generalized rate pair of `(A, B)`: `rho_sup = ‖A^{-1/2}BA^{-1/2}‖₂`
/// and `rho_inf` the smallest absolute eigenvalue of the same matrix
/// (set to 0 when that eigenvalue is numerically zero).
pub fn generalized_rate_pair(a: &SymMatrix, b: &SymMatrix) -> Result<RatePair> {
    let w = whitened(a, b)?;
    let spec = eigh(&w)?;
    let sup = spec.max_abs();
    let mut inf = spec.min_abs();
    if inf < SINGULAR_REL_TOL * sup.max(1.0) {
        inf = 0.0;
    }
    Ok(RatePair::new(inf, sup))
}

/// Solves `S x = b` for symmetric invertible `S` using its spectrum.
/// Fails when `min|λ| < 1e-12 · max|λ|`.
pub fn solve_symmetric(s: &SymMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if s.dim() != b.len() {
        return Err(SurroError::DimensionMismatch {
            expected: s.dim(),
            got: b.len(),
        });
    }
    let spec = eigh(s)?;
    let tol = SINGULAR_REL_TOL * spec.max_abs();
    if spec.min_abs() <= tol || spec.max_abs() == 0.0 {
        return Err(SurroError::InternalNumericalFailure(
            "singular symmetric system".into(),
        ));
    }
    let n = b.len();
    let vt_b: Vec<f64> = (0..n)
        .map(|j| (0..n).map(|i| spec.vectors[(i, j)] * b[i]).sum::<f64>() / spec.values[j])
        .collect();
    Ok(spec.vectors.matvec(&vt_b))
}

/// Inverse of a symmetric positive-definite matrix.
pub fn inverse_spd(s: &SymMatrix) -> Result<SymMatrix> {
    Ok(positive_definite_spectrum(s)?.map(|l| 1.0 / l))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// `a + s·b`
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn eigh_diagonal_sorts_ascending() {
        let s = SymMatrix::from_diag(&[3.0, 1.0]);
        let spec = eigh(&s).unwrap();
        assert_eq!(spec.values, vec![1.0, 3.0]);
        // permuted identity
        assert!(close(spec.vectors[(1, 0)].abs(), 1.0, 1e-15));
        assert!(close(spec.vectors[(0, 1)].abs(), 1.0, 1e-15));
    }

    #[test]
    fn eigh_two_by_two() {
        let s = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let spec = eigh(&s).unwrap();
        assert!(close(spec.values[0], 1.0, 1e-12));
        assert!(close(spec.values[1], 3.0, 1e-12));
    }

    #[test]
    fn eigh_identity() {
        let spec = eigh(&SymMatrix::identity(4)).unwrap();
        assert_eq!(spec.values, vec![1.0; 4]);
        let vtv = spec.vectors.transpose().matmul(&spec.vectors);
        assert!(vtv.sub(&Matrix::identity(4)).max_abs() < 1e-12);
    }

    #[test]
    fn symmetrization_records_asymmetry() {
        let (s, asym) = SymMatrix::with_asymmetry(Matrix::from_rows(&[
            vec![1.0, 2.0],
            vec![0.0, 1.0],
        ]));
        assert_eq!(asym, 2.0);
        assert_eq!(s.get(0, 1), 1.0);
        assert_eq!(s.get(1, 0), 1.0);
    }

    #[test]
    fn inv_sqrt_diagonal() {
        let r = inv_sqrt(&SymMatrix::from_diag(&[4.0, 9.0])).unwrap();
        assert!(close(r.get(0, 0), 0.5, 1e-14));
        assert!(close(r.get(1, 1), 1.0 / 3.0, 1e-14));
        assert!(close(r.get(0, 1), 0.0, 1e-14));
        let i = inv_sqrt(&SymMatrix::identity(3)).unwrap();
        assert!(i.as_matrix().sub(&Matrix::identity(3)).max_abs() < 1e-14);
    }

    #[test]
    fn inv_sqrt_rejects_indefinite() {
        let err = inv_sqrt(&SymMatrix::from_diag(&[1.0, -2.0])).unwrap_err();
        match err {
            SurroError::NotPositiveDefinite { min_eigenvalue } => {
                assert!(close(min_eigenvalue, -2.0, 1e-14))
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(inv_sqrt(&SymMatrix::zeros(2)).is_err());
    }

    #[test]
    fn spectral_norm_basics() {
        assert_eq!(spectral_norm(&Matrix::zeros(3, 3)), 0.0);
        assert!(close(
            spectral_norm(&Matrix::from_diag(&[-2.0, 1.0])),
            2.0,
            1e-14
        ));
        // rank-one non-square: ‖u vᵀ‖ = ‖u‖‖v‖
        let m = Matrix::from_rows(&[vec![3.0, 4.0, 0.0]]);
        assert!(close(spectral_norm(&m), 5.0, 1e-13));
    }

    #[test]
    fn rate_pair_diagonal_and_zero() {
        let a = SymMatrix::identity(2);
        let rp = generalized_rate_pair(&a, &SymMatrix::from_diag(&[0.2, -0.5])).unwrap();
        assert!(close(rp.rho_inf, 0.2, 1e-14));
        assert!(close(rp.rho_sup, 0.5, 1e-14));
        let rp = generalized_rate_pair(&a, &SymMatrix::zeros(2)).unwrap();
        assert_eq!((rp.rho_inf, rp.rho_sup), (0.0, 0.0));
    }

    #[test]
    fn rate_pair_dimension_mismatch() {
        let err =
            generalized_rate_pair(&SymMatrix::identity(2), &SymMatrix::identity(3)).unwrap_err();
        assert!(matches!(err, SurroError::DimensionMismatch { .. }));
    }

    #[test]
    fn solve_symmetric_indefinite() {
        let s = SymMatrix::from_rows(&[vec![0.0, 2.0], vec![2.0, 1.0]]);
        let x = solve_symmetric(&s, &[2.0, 3.0]).unwrap();
        let back = s.as_matrix().matvec(&x);
        assert!(close(back[0], 2.0, 1e-12) && close(back[1], 3.0, 1e-12));
        assert!(solve_symmetric(&SymMatrix::from_diag(&[1.0, 0.0]), &[1.0, 1.0]).is_err());
    }
}
