use std::f64::consts::TAU;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Box-Muller transform of `(u1, u2)` with `u1` in `(0, 1]`.
pub fn box_muller(u1: f64, u2: f64) -> (f64, f64) {
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (TAU * u2).sin_cos();
    (r * c, r * s)
}

/// Reproducible stream of uniforms and normals identified by `(seed, id)`.
///
/// Streams with the same seed and different ids are non-overlapping ChaCha8
/// streams.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    id: u64,
    core: ChaCha8Rng,
    spare: Option<f64>,
}

impl RngStream {
    pub fn new(seed: u64, id: u64) -> Self {
        let mut core = ChaCha8Rng::seed_from_u64(seed);
        core.set_stream(id);
        RngStream {
            seed,
            id,
            core,
            spare: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    /// Uniform in `(0, 1]` on a 2^-53 lattice.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.core.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let (z1, z2) = box_muller(u1, u2);
        self.spare = Some(z2);
        z1
    }

    pub fn gaussian_pairs(&mut self, count: usize) -> Vec<f64> {
        (0..count).map(|_| self.standard_normal()).collect()
    }

    /// `steps` Brownian increments over a step of length `dt`.
    pub fn wiener_increments(&mut self, steps: usize, dt: f64) -> Vec<f64> {
        let s = dt.sqrt();
        (0..steps).map(|_| s * self.standard_normal()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_muller_examples() {
        let (z1, z2) = box_muller((-2.0f64).exp(), 0.25);
        assert!(z1.abs() < 1e-15);
        assert!((z2 - 2.0).abs() < 1e-15);
        assert_eq!(box_muller(1.0, 0.731), (0.0, 0.0));
    }

    #[test]
    fn uniform_range() {
        let mut r = RngStream::new(3, 0);
        for _ in 0..100_000 {
            let u = r.uniform();
            assert!(u > 0.0 && u <= 1.0);
        }
    }

    #[test]
    fn normal_moments() {
        let z = RngStream::new(1, 0).gaussian_pairs(1_000_000);
        let n = z.len() as f64;
        let mean = z.iter().sum::<f64>() / n;
        let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() <= 0.005, "mean {mean}");
        assert!((var - 1.0).abs() <= 0.01, "var {var}");
    }

    #[test]
    fn increments_scale_with_dt() {
        let g = RngStream::new(9, 4).wiener_increments(100_000, 0.01);
        let var = g.iter().map(|v| v * v).sum::<f64>() / g.len() as f64;
        assert!((var - 0.01).abs() <= 0.05 * 0.01, "var {var}");
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = RngStream::new(42, 7).wiener_increments(64, 0.1);
        let b = RngStream::new(42, 7).wiener_increments(64, 0.1);
        let c = RngStream::new(42, 8).wiener_increments(64, 0.1);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn brownian_endpoint_variance() {
        let (t, steps) = (2.0, 200);
        let dt = t / steps as f64;
        let paths = 1000;
        let ends: Vec<f64> = (0..paths)
            .map(|p| RngStream::new(5, p).wiener_increments(steps, dt).iter().sum())
            .collect();
        let m2 = ends.iter().map(|w| w * w).sum::<f64>() / paths as f64;
        // sd of the estimator is t * sqrt(2 / paths) ~ 0.09
        assert!((m2 - t).abs() < 0.3, "E[W(T)^2] = {m2}");
    }
}
