//! Shared oracles for the integration tests. These stay independent of the
//! library's own forward/backward code paths.
#![allow(dead_code)] // each test binary uses a different subset

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-5;
pub const FD_REL_TOL: f64 = 1e-4;

/// Central finite differences of a scalar function at `x`.
pub fn finite_difference(f: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let mut grad = Vec::with_capacity(x.len());
    let mut probe = x.to_vec();
    for e in 0..x.len() {
        let orig = probe[e];
        probe[e] = orig + FD_STEP;
        let plus = f(&probe);
        probe[e] = orig - FD_STEP;
        let minus = f(&probe);
        probe[e] = orig;
        grad.push((plus - minus) / (2.0 * FD_STEP));
    }
    grad
}

/// Relative-error check with an absolute floor for near-zero gradients.
pub fn assert_close_rel(analytic: &[f64], numeric: &[f64], what: &str) {
    assert_eq!(analytic.len(), numeric.len(), "{what}: length mismatch");
    for (e, (&a, &n)) in analytic.iter().zip(numeric).enumerate() {
        let denom = a.abs().max(n.abs()).max(1e-6);
        let rel = (a - n).abs() / denom;
        assert!(
            rel <= FD_REL_TOL,
            "{what}[{e}]: analytic {a} vs numeric {n} (rel {rel:.3e})"
        );
    }
}

/// Uniform values in [lo, hi], deterministic in the seed.
pub fn random_values(len: usize, lo: f64, hi: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.gen::<f64>() * (hi - lo) + lo).collect()
}

/// Values bounded away from zero, for kinked ops like relu and abs.
pub fn random_values_off_zero(len: usize, seed: u64) -> Vec<f64> {
    random_values(len, 0.1, 1.5, seed)
        .into_iter()
        .enumerate()
        .map(|(e, v)| if e % 2 == 0 { v } else { -v })
        .collect()
}
