//! Seeded randomness.
//!
//! Every random draw in the crate goes through [`seeded`], which returns a
//! ChaCha8 stream cipher generator. ChaCha is counter based and defined
//! bit-for-bit independently of platform, so a given seed reproduces the
//! same draws everywhere. Seeds are expanded with `SeedableRng::seed_from_u64`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type CurRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> CurRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vector(rng: &mut CurRng, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_matrix(rng: &mut CurRng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// A normalized Gaussian vector. Falls back to `e_0` in the (measure zero)
/// case of an all-zero draw.
pub fn unit_vector(rng: &mut CurRng, len: usize) -> DVector<f64> {
    let mut v = gaussian_vector(rng, len);
    let norm = v.norm();
    if norm > 0.0 {
        v /= norm;
    } else if len > 0 {
        v[0] = 1.0;
    }
    v
}
