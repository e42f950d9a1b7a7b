//! Gauss–Hermite quadrature for Gaussian expectations.

use std::f64::consts::PI;


/// Gauss–Hermite rule for the weight `exp(-x²)`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Builds an `n`-point rule. Nodes start from the eigenvalues of the
    /// Jacobi matrix of the Hermite recurrence (Sturm bisection) and are polished by Newton
    /// steps on the normalized Hermite functions, which also give the weights.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "rule needs at least one node");
        let guesses = jacobi_matrix_eigenvalues(n);
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for mut z in guesses {
            let mut pp = hermite_function(n, z).1;
            for _ in 0..8 {
                let (p, d) = hermite_function(n, z);
                pp = d;
                let step = p / d;
                z -= step;
                if step.abs() <= 1e-15 * z.abs().max(1.0) {
                    pp = hermite_function(n, z).1;
                    break;
                }
            }
            nodes.push(z);
            weights.push(2.0 * (-z * z).exp() / (pp * pp));
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        // Enforce exact symmetry.
        for i in 0..n / 2 {
            let z = 0.5 * (nodes[n - 1 - i] - nodes[i]);
            let w = 0.5 * (weights[i] + weights[n - 1 - i]);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Iterates `(x, w)` pairs for `E[g(X)]`, `X ~ N(mean, sd²)`: the
    /// expectation is `Σ w·g(x)`.
    pub fn normal_points(&self, mean: f64, sd: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let s = std::f64::consts::SQRT_2 * sd;
        let norm = 1.0 / PI.sqrt();
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mean + s * x, w * norm))
    }

    /// `E[g(X)]` for `X ~ N(mean, sd²)`.
    pub fn normal_expectation(&self, mean: f64, sd: f64, mut g: impl FnMut(f64) -> f64) -> f64 {
        self.normal_points(mean, sd).map(|(x, w)| w * g(x)).sum()
    }
}

/// Eigenvalues of the zero-diagonal tridiagonal matrix with off-diagonal
/// `√(k/2)`, by Sturm-sequence bisection.
fn jacobi_matrix_eigenvalues(n: usize) -> Vec<f64> {
    let off2: Vec<f64> = (1..n).map(|k| k as f64 / 2.0).collect();
    // Number of eigenvalues strictly below x.
    let count_below = |x: f64| {
        let mut count = 0;
        let mut d = -x;
        if d < 0.0 {
            count += 1;
        }
        for b2 in &off2 {
            let prev = if d == 0.0 { f64::EPSILON } else { d };
            d = -x - b2 / prev;
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };
    let bound = (2.0 * n as f64 + 1.0).sqrt() + 1.0;
    (0..n)
        .map(|k| {
            let (mut lo, mut hi) = (-bound, bound);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if count_below(mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

/// `(ψ_n(z), √(2n)·ψ_{n−1}(z))` for the orthonormal Hermite polynomials
/// scaled by `e^{−z²/2}`, which keeps the recurrence in range for large `n`.
/// The second value is the polynomial derivative under the same scaling.
fn hermite_function(n: usize, z: f64) -> (f64, f64) {
    const PIM4: f64 = 0.751_125_544_464_942_5; // π^{-1/4}
    let mut p1 = PIM4 * (-0.5 * z * z).exp();
    let mut p2 = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
    }
    (p1, (2.0 * n as f64).sqrt() * p2)
}

/// Node counts tried by the adaptive rules: doubled from 20, capped at 200.
pub const ADAPTIVE_LADDER: [usize; 5] = [20, 40, 80, 160, 200];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_sqrt_pi() {
        for n in [1, 2, 5, 20, 40, 80, 160, 200] {
            let gh = GaussHermite::new(n);
            let s: f64 = gh.weights().iter().sum();
            assert!((s - PI.sqrt()).abs() < 1e-12, "n={n} sum={s}");
        }
    }

    #[test]
    fn normal_moments_are_exact() {
        // E[X^{2k}] = (2k-1)!! for the standard normal.
        let gh = GaussHermite::new(20);
        let mut dfact = 1.0;
        for k in 1..=10 {
            dfact *= (2 * k - 1) as f64;
            let m = gh.normal_expectation(0.0, 1.0, |x| x.powi(2 * k));
            assert!((m - dfact).abs() <= 1e-10 * dfact, "k={k}: {m} vs {dfact}");
            let odd = gh.normal_expectation(0.0, 1.0, |x| x.powi(2 * k - 1));
            // Cancellation between terms of size ~E[X^{2k}].
            assert!(odd.abs() <= 1e-13 * dfact, "k={k}: {odd}");
        }
    }

    #[test]
    fn gaussian_mgf() {
        // E[exp(aX)] = exp(a m + a² s² / 2)
        let gh = GaussHermite::new(40);
        for &(m, s, a) in &[(0.3, 1.2, 0.7), (-1.0, 0.5, -2.0), (2.0, 2.0, 0.25)] {
            let got = gh.normal_expectation(m, s, |x| (a * x).exp());
            let want = (a * m + 0.5 * a * a * s * s).exp();
            assert!((got - want).abs() <= 1e-12 * want, "{got} vs {want}");
        }
    }
}
