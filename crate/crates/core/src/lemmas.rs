//! Randomized checks of the matrix inequalities behind the rate analysis.
//!
//! Each suite draws `trials` random instances in dimensions 1 to 8 and
//! counts counterexamples. Quantities are cross-checked through paths that
//! do not share code with [`linalg::generalized_rate_pair`]: a Cholesky
//! solve plus Gelfand's formula for spectral radii, and direction sampling
//! refined by gradient ascent for Rayleigh-quotient suprema.

use rand::Rng;

use crate::error::{Result, SurroError};
use crate::linalg::{self, Matrix, SymMatrix};
use crate::rng::{self, SurroRng};

pub const MAX_DIM: usize = 8;
const MAX_SHOWN: usize = 3;

fn show(shown: &mut Vec<String>, text: impl FnOnce() -> String) {
    if shown.len() < MAX_SHOWN {
        shown.push(text());
    }
}

pub fn format_matrix(m: &Matrix) -> String {
    m.to_rows()
        .iter()
        .map(|r| {
            let cells: Vec<String> = r.iter().map(|x| format!("{x:.16e}")).collect();
            format!("[{}]", cells.join(", "))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaOutcome {
    pub name: &'static str,
    pub trials: usize,
    pub counterexamples: usize,
    /// Largest violation (or deviation) observed; ≤ 0 means every check held
    /// with room to spare for inequality suites.
    pub worst: f64,
    /// The first few failing instances, printed in full.
    pub shown: Vec<String>,
}

impl LemmaOutcome {
    pub fn passed(&self) -> bool {
        self.counterexamples == 0
    }
}

/// `G Gᵀ / d + floor · I` with Gaussian `G`.
pub fn random_spd(rng: &mut SurroRng, d: usize, floor: f64) -> SymMatrix {
    let g = Matrix::from_row_major(d, d, rng::normal_vec(rng, d * d));
    let m = g.matmul(&g.transpose()).scale(1.0 / d as f64);
    SymMatrix::new(m.add(&Matrix::identity(d).scale(floor)))
}

pub fn random_symmetric(rng: &mut SurroRng, d: usize) -> SymMatrix {
    let g = Matrix::from_row_major(d, d, rng::normal_vec(rng, d * d));
    SymMatrix::new(g.add(&g.transpose()).scale(0.5))
}

/// Random symmetric matrix with spectral norm exactly `t`.
fn symmetric_with_norm(rng: &mut SurroRng, d: usize, t: f64) -> SymMatrix {
    loop {
        let e = random_symmetric(rng, d);
        let n = linalg::spectral_norm(e.as_matrix());
        if n > 1e-8 {
            return e.scale(t / n);
        }
    }
}

fn random_dim(rng: &mut SurroRng) -> usize {
    rng.random_range(1..=MAX_DIM)
}

/// Lower-triangular Cholesky factor.
fn cholesky(a: &SymMatrix) -> Result<Matrix> {
    let n = a.dim();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) {
            return Err(SurroError::NotPositiveDefinite { min_eigenvalue: d });
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// `A⁻¹M` column by column through the Cholesky factor of `A`.
fn cholesky_solve(a: &SymMatrix, m: &Matrix) -> Result<Matrix> {
    let l = cholesky(a)?;
    let n = a.dim();
    let mut out = Matrix::zeros(n, m.cols());
    for c in 0..m.cols() {
        let mut y = m.column(c);
        for i in 0..n {
            for k in 0..i {
                y[i] -= l[(i, k)] * y[k];
            }
            y[i] /= l[(i, i)];
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                y[i] -= l[(k, i)] * y[k];
            }
            y[i] /= l[(i, i)];
        }
        for i in 0..n {
            out[(i, c)] = y[i];
        }
    }
    Ok(out)
}

/// Spectral radius by Gelfand's formula `lim ‖M^N‖^{1/N}`, with
/// `N = 2^40` reached by rescaled repeated squaring.
pub fn spectral_radius(m: &Matrix) -> f64 {
    let c = m.frobenius();
    if c == 0.0 {
        return 0.0;
    }
    let mut x = m.scale(1.0 / c);
    let mut log_norm = c.ln();
    for _ in 0..40 {
        x = x.matmul(&x);
        let s = x.frobenius();
        if s == 0.0 {
            return 0.0;
        }
        x = x.scale(1.0 / s);
        log_norm = 2.0 * log_norm + s.ln();
    }
    (log_norm / 2f64.powi(40)).exp()
}

/// `sup |vᵀBv| / vᵀAv` estimated from `samples` random directions. For
/// each sign of the quotient the best sample is polished by backtracking
/// gradient ascent.
pub fn sampled_sup_ratio(a: &SymMatrix, b: &SymMatrix, samples: usize, rng: &mut SurroRng) -> f64 {
    let d = a.dim();
    let ratio = |v: &[f64]| b.quad_form(v) / a.quad_form(v);
    let mut best_pos = rng::unit_vector(rng, d);
    let mut best_neg = best_pos.clone();
    for _ in 1..samples {
        let v = rng::unit_vector(rng, d);
        let r = ratio(&v);
        if r > ratio(&best_pos) {
            best_pos = v.clone();
        }
        if r < ratio(&best_neg) {
            best_neg = v;
        }
    }
    let up = ascend(a, b, best_pos, 1.0);
    let down = ascend(a, b, best_neg, -1.0);
    up.max(down).max(0.0)
}

/// Maximizes `sign · vᵀBv / vᵀAv` from `v`; returns the final value.
fn ascend(a: &SymMatrix, b: &SymMatrix, mut v: Vec<f64>, sign: f64) -> f64 {
    let objective = |v: &[f64]| sign * b.quad_form(v) / a.quad_form(v);
    let mut t = 1.0;
    for _ in 0..2000 {
        let r = objective(&v);
        let av = a.as_matrix().matvec(&v);
        let bv = b.as_matrix().matvec(&v);
        let denom = a.quad_form(&v);
        let grad: Vec<f64> = bv
            .iter()
            .zip(&av)
            .map(|(x, y)| 2.0 * (sign * x - r * y) / denom)
            .collect();
        if linalg::norm2(&grad) < 1e-14 {
            break;
        }
        let mut improved = false;
        for _ in 0..50 {
            let cand = linalg::axpy(&v, t, &grad);
            let cand = linalg::scale(&cand, 1.0 / linalg::norm2(&cand));
            if objective(&cand) > r {
                v = cand;
                t *= 2.0;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    objective(&v)
}

fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(SurroError::InvalidArgument("trials must be at least 1".into()));
    }
    Ok(())
}

/// `ρ(A⁻¹B) = ρ(BA⁻¹) = ‖A^{−1/2}BA^{−1/2}‖₂ = sup |vᵀBv|/vᵀAv`. The three
/// exact quantities must agree within `1e-6` (relative to `max(1, ρ)`), the
/// sampled supremum within `1e-2`.
pub fn rate_identity(trials: usize, rng: &mut SurroRng) -> Result<LemmaOutcome> {
    check_trials(trials)?;
    let mut bad = 0;
    let mut shown = Vec::new();
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let d = random_dim(rng);
        let a = random_spd(rng, d, 0.2);
        let b = random_symmetric(rng, d);
        let whitened = linalg::generalized_rate_pair(&a, &b)?.rho_sup;
        let left = spectral_radius(&cholesky_solve(&a, b.as_matrix())?);
        let a_inv = cholesky_solve(&a, &Matrix::identity(d))?;
        let right = spectral_radius(&b.as_matrix().matmul(&a_inv));
        let sampled = sampled_sup_ratio(&a, &b, 2000, rng);
        let scale = whitened.max(1.0);
        let exact_dev = (left - whitened).abs().max((right - whitened).abs()) / scale;
        let sampled_dev = (sampled - whitened).abs() / scale;
        worst = worst.max(exact_dev).max(sampled_dev);
        if exact_dev > 1e-6 || sampled_dev > 1e-2 {
            bad += 1;
            show(&mut shown, || {
                format!(
                    "A =\n{}\nB =\n{}\nwhitened {whitened:e}, rho(A^-1 B) {left:e}, rho(B A^-1) {right:e}, sampled {sampled:e}",
                    format_matrix(a.as_matrix()),
                    format_matrix(b.as_matrix())
                )
            });
        }
    }
    Ok(LemmaOutcome {
        name: "rate_identity",
        trials,
        counterexamples: bad,
        worst,
        shown,
    })
}

/// `xᵀAx ≤ xᵀBy ⟹ ‖x‖_A ≤ ρ‖y‖_A` with `ρ = ‖A^{−1/2}BA^{−1/2}‖₂`.
/// Pairs are rescaled so the hypothesis holds, sometimes with equality.
pub fn domination(trials: usize, rng: &mut SurroRng) -> Result<LemmaOutcome> {
    check_trials(trials)?;
    let mut bad = 0;
    let mut shown = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let d = random_dim(rng);
        let a = random_spd(rng, d, 0.2);
        let b = random_symmetric(rng, d);
        let rho = linalg::generalized_rate_pair(&a, &b)?.rho_sup;
        let x = rng::normal_vec(rng, d);
        let mut y = rng::normal_vec(rng, d);
        let mut cross = linalg::dot(&x, &b.as_matrix().matvec(&y));
        if cross < 0.0 {
            y = linalg::scale(&y, -1.0);
            cross = -cross;
        }
        // c²xᵀAx ≤ c·xᵀBy for c ≤ xᵀBy / xᵀAx.
        let u: f64 = if rng.random_bool(0.2) { 1.0 } else { rng.random() };
        let x = linalg::scale(&x, u * cross / a.quad_form(&x));
        debug_assert!(a.quad_form(&x) <= linalg::dot(&x, &b.as_matrix().matvec(&y)) * (1.0 + 1e-12));
        let lhs = a.quad_form(&x).sqrt();
        let rhs = rho * a.quad_form(&y).sqrt();
        let violation = lhs - rhs - 1e-9 * (1.0 + rhs);
        worst = worst.max(lhs - rhs);
        if violation > 0.0 {
            bad += 1;
            show(&mut shown, || {
                format!(
                    "A =\n{}\nB =\n{}\nx = {x:?}\ny = {y:?}\n|x|_A {lhs:e} > rho |y|_A {rhs:e}",
                    format_matrix(a.as_matrix()),
                    format_matrix(b.as_matrix())
                )
            });
        }
    }
    Ok(LemmaOutcome {
        name: "domination",
        trials,
        counterexamples: bad,
        worst,
        shown,
    })
}

/// With `δ = ε λ_min(S⋆)/2`, every symmetric `S` with `‖S − S⋆‖₂ < δ`
/// satisfies `(1−ε)‖x‖_S ≤ ‖x‖_{S⋆} ≤ (1+ε)‖x‖_S`. Each trial draws one
/// `S⋆`, one `S` per `ε ∈ {0.5, 0.1, 0.01}` and 100 vectors `x`.
pub fn norm_sandwich(trials: usize, rng: &mut SurroRng) -> Result<LemmaOutcome> {
    check_trials(trials)?;
    let mut bad = 0;
    let mut shown = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let d = random_dim(rng);
        let s_star = random_spd(rng, d, 0.1);
        let lam_min = linalg::eigh(&s_star)?.min();
        for eps in [0.5, 0.1, 0.01] {
            let delta = eps * lam_min / 2.0;
            let u: f64 = rng.random();
            let s = s_star.add(&symmetric_with_norm(rng, d, delta * u * (1.0 - 1e-9)));
            let mut failed = None;
            for _ in 0..100 {
                let x = rng::normal_vec(rng, d);
                let n_star = s_star.quad_form(&x).sqrt();
                let n_s = s.quad_form(&x).max(0.0).sqrt();
                let v = ((1.0 - eps) * n_s - n_star).max(n_star - (1.0 + eps) * n_s);
                worst = worst.max(v / n_star);
                if v > 1e-12 * n_star && failed.is_none() {
                    failed = Some(x);
                }
            }
            if let Some(x) = failed {
                bad += 1;
                show(&mut shown, || {
                    format!(
                        "S* =\n{}\nS =\n{}\neps {eps}, x = {x:?}",
                        format_matrix(s_star.as_matrix()),
                        format_matrix(s.as_matrix())
                    )
                });
            }
        }
    }
    Ok(LemmaOutcome {
        name: "norm_sandwich",
        trials,
        counterexamples: bad,
        worst,
        shown,
    })
}

/// Perturbation bound on `ρ̄`: for `‖M‖₂, ‖N‖₂ ≤ t < λ_min(A)`,
/// `|ρ(A, B) − ρ(A+M, B+N)| ≤ C t` with
/// `C = (1 + max(ρ, ρ′)) / (λ_min(A) − t)`, checked at
/// `t ∈ {1e-2, 1e-3, 1e-4}`. `worst` is the largest fitted ratio
/// `deviation / (C t)`.
pub fn rate_perturbation(trials: usize, rng: &mut SurroRng) -> Result<LemmaOutcome> {
    check_trials(trials)?;
    let mut bad = 0;
    let mut shown = Vec::new();
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let d = random_dim(rng);
        let a = random_spd(rng, d, 0.5);
        let b = random_symmetric(rng, d);
        let lam_min = linalg::eigh(&a)?.min();
        let rho = linalg::generalized_rate_pair(&a, &b)?.rho_sup;
        let mut failed = None;
        for t in [1e-2, 1e-3, 1e-4] {
            let m = symmetric_with_norm(rng, d, t);
            let n = symmetric_with_norm(rng, d, t);
            let rho2 = linalg::generalized_rate_pair(&a.add(&m), &b.add(&n))?.rho_sup;
            let c = (1.0 + rho.max(rho2)) / (lam_min - t);
            let dev = (rho - rho2).abs();
            worst = worst.max(dev / (c * t));
            if dev > c * t + 1e-9 && failed.is_none() {
                failed = Some((t, m, n, dev, c));
            }
        }
        if let Some((t, m, n, dev, c)) = failed {
            bad += 1;
            show(&mut shown, || {
                format!(
                    "A =\n{}\nB =\n{}\nM =\n{}\nN =\n{}\nt {t:e}: deviation {dev:e} > C t with C = {c:e}",
                    format_matrix(a.as_matrix()),
                    format_matrix(b.as_matrix()),
                    format_matrix(m.as_matrix()),
                    format_matrix(n.as_matrix())
                )
            });
        }
    }
    Ok(LemmaOutcome {
        name: "rate_perturbation",
        trials,
        counterexamples: bad,
        worst,
        shown,
    })
}

/// All four suites, each on its own stream of generator `seed`.
pub fn run_all(trials: usize, seed: u64) -> Result<Vec<LemmaOutcome>> {
    check_trials(trials)?;
    Ok(vec![
        rate_identity(trials, &mut rng::seeded(seed, 1))?,
        domination(trials, &mut rng::seeded(seed, 2))?,
        norm_sandwich(trials, &mut rng::seeded(seed, 3))?,
        rate_perturbation(trials, &mut rng::seeded(seed, 4))?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gelfand_radius_of_known_matrices() {
        let m = Matrix::from_rows(&[vec![0.5, 10.0], vec![0.0, -0.7]]);
        assert!((spectral_radius(&m) - 0.7).abs() < 1e-9);
        assert_eq!(spectral_radius(&Matrix::zeros(3, 3)), 0.0);
        let rot = Matrix::from_rows(&[vec![0.0, -2.0], vec![2.0, 0.0]]);
        assert!((spectral_radius(&rot) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn cholesky_solve_inverts() {
        let mut r = rng::seeded(3, 0);
        let a = random_spd(&mut r, 5, 0.3);
        let inv = cholesky_solve(&a, &Matrix::identity(5)).unwrap();
        assert!(a.as_matrix().matmul(&inv).sub(&Matrix::identity(5)).max_abs() < 1e-10);
    }

    #[test]
    fn suites_pass() {
        for o in run_all(200, 17).unwrap() {
            assert!(o.passed(), "{o:?}");
        }
        assert!(run_all(0, 1).is_err());
    }
}
