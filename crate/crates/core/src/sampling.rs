//! Seeded random streams shared by the estimators.
//!
//! Every unit of parallel work draws from its own ChaCha stream derived from
//! `(seed, stream)`, so serial and parallel evaluation see the same numbers.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Stream ids reserved for distinct purposes within one seed.
pub(crate) mod stream {
    pub const CENTERS: u64 = 1;
    pub const DIRECTIONS: u64 = 2;
    pub const LIPSCHITZ: u64 = 5;
    pub const PAIRS: u64 = 6;
    pub const PER_DEVICE_BASE: u64 = 1 << 32;
    pub const DEVICE_SAMPLING_BASE: u64 = 2 << 32;
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Point of the disc whose hyperbolic distance to the origin is uniform on
/// `[0, max_depth]`; spreads samples all the way towards the boundary.
pub fn disc_point_by_depth<R: Rng + ?Sized>(rng: &mut R, max_depth: f64) -> Complex64 {
    let depth = rng.random::<f64>() * max_depth;
    let angle = rng.random::<f64>() * TAU;
    Complex64::from_polar(depth.tanh(), angle)
}

/// Uniformly distributed unit vector of `C^n` (the sphere `S^{2n-1}`).
pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|c| c / norm).collect();
        }
    }
}

/// Point of the unit ball of `C^n` at hyperbolic depth uniform on `[0, max_depth]`.
pub fn ball_point_by_depth<R: Rng + ?Sized>(rng: &mut R, n: usize, max_depth: f64) -> Vec<Complex64> {
    let depth = rng.random::<f64>() * max_depth;
    let t = depth.tanh();
    unit_vector(rng, n).into_iter().map(|c| c * t).collect()
}

/// Uniform point of the Euclidean ball of radius `radius` in `C^n`.
pub fn uniform_in_ball<R: Rng + ?Sized>(rng: &mut R, n: usize, radius: f64) -> Vec<Complex64> {
    let u: f64 = rng.random();
    let r = radius * u.powf(1.0 / (2 * n) as f64);
    unit_vector(rng, n).into_iter().map(|c| c * r).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| stream_rng(7, 1).random()).collect();
        let mut r1 = stream_rng(7, 1);
        let mut r2 = stream_rng(7, 2);
        let x: u64 = r1.random();
        let y: u64 = r2.random();
        assert_eq!(a[0], x);
        assert_ne!(x, y);
    }

    #[test]
    fn samplers_stay_inside() {
        let mut rng = stream_rng(1, 0);
        for _ in 0..1000 {
            assert!(disc_point_by_depth(&mut rng, 8.0).norm() < 1.0);
            let p = uniform_in_ball(&mut rng, 3, 0.7);
            assert!(p.iter().map(|c| c.norm_sqr()).sum::<f64>() < 0.49 + 1e-12);
            let u = unit_vector(&mut rng, 2);
            let n: f64 = u.iter().map(|c| c.norm_sqr()).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }
}
