//! Seeded randomness helpers. Everything in the crate draws from ChaCha8
//! streams created here, so runs are reproducible from a single `u64` seed.

use alloc::vec::Vec;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[allow(unused_imports)]
use num_traits::Float;

use crate::vector::ParamVec;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive a per-step seed from a run seed; used for metric streams so that
/// inserting extra draws elsewhere cannot shift them.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    seed ^ (index.wrapping_add(0x9E37_79B9_7F4A_7C15))
        .wrapping_mul(0xBF58_476D_1CE4_E5B9)
}

/// One standard normal draw (Box–Muller).
pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (core::f64::consts::TAU * u2).cos()
}

/// Uniformly random unit vector.
pub fn unit_sphere<R: Rng>(rng: &mut R, dim: usize) -> ParamVec {
    assert!(dim >= 1);
    loop {
        let v: Vec<f64> = (0..dim).map(|_| standard_normal(rng)).collect();
        let mut v = ParamVec::new(v);
        let n = v.norm();
        if n > 0.0 {
            v.scale(1.0 / n);
            return v;
        }
    }
}
