//! Reproducible random streams.
//!
//! All randomness goes through ChaCha8, a counter-based generator whose
//! output is identical across platforms for a given seed. Gaussian variates
//! use the Box–Muller transform so the mapping from uniforms is fixed too.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SurroRng = ChaCha8Rng;

/// Seeded generator; `stream` selects an independent substream.
pub fn seeded(seed: u64, stream: u64) -> SurroRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform on the open interval (0, 1).
pub fn open_uniform(rng: &mut SurroRng) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// One standard normal variate via Box–Muller (the sine branch is discarded
/// so each draw consumes exactly two uniforms).
pub fn standard_normal(rng: &mut SurroRng) -> f64 {
    let u1 = open_uniform(rng);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn normal_vec(rng: &mut SurroRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| standard_normal(rng)).collect()
}

/// Uniform direction on the unit sphere of `R^n`.
pub fn unit_vector(rng: &mut SurroRng, n: usize) -> Vec<f64> {
    loop {
        let v = normal_vec(rng, n);
        let norm = crate::linalg::norm2(&v);
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}
