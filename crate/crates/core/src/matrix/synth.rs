//! Synthetic sparse nonnegative test matrices.
//!
//! `A = Σ_{j=1}^{T} w_j x_j y_jᵀ` with `w_j = 2/j` for `j ≤ 10` and `1/j`
//! afterwards. Each `x_j`, `y_j` has `round(density · len)` (at least one)
//! nonzeros at distinct uniformly chosen positions, with values drawn from
//! uniform(0, 1).

use rand::seq::index;
use rand::Rng;

use super::CsrMatrix;
use crate::error::{CurError, Result};
use crate::rng::{self, CurRng};

pub const DEFAULT_DENSITY: f64 = 0.025;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub rows: usize,
    pub cols: usize,
    pub density: f64,
    /// Number of rank-one terms; defaults to `cols`.
    pub terms: Option<usize>,
    pub seed: u64,
}

impl SynthParams {
    pub fn new(rows: usize, cols: usize, density: f64, seed: u64) -> Self {
        Self {
            rows,
            cols,
            density,
            terms: None,
            seed,
        }
    }
}

fn sparse_uniform(rng: &mut CurRng, len: usize, density: f64) -> Vec<(usize, f64)> {
    let count = ((density * len as f64).round() as usize).clamp(1, len);
    let mut positions = index::sample(rng, len, count).into_vec();
    positions.sort_unstable();
    positions
        .into_iter()
        .map(|i| (i, rng.random::<f64>()))
        .collect()
}

fn weight(j: usize) -> f64 {
    if j <= 10 {
        2.0 / j as f64
    } else {
        1.0 / j as f64
    }
}

pub fn synth_sparse(params: &SynthParams) -> Result<CsrMatrix> {
    let SynthParams {
        rows,
        cols,
        density,
        terms,
        seed,
    } = *params;
    if rows == 0 || cols == 0 {
        return Err(CurError::InvalidArgument(
            "synthetic matrix dimensions must be positive".into(),
        ));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(CurError::InvalidArgument(format!(
            "density must lie in (0, 1], got {density}"
        )));
    }
    let terms = terms.unwrap_or(cols);
    if terms == 0 {
        return Err(CurError::InvalidArgument("at least one term is required".into()));
    }
    let mut rng = rng::seeded(seed);
    let mut triplets = Vec::new();
    for j in 1..=terms {
        let x = sparse_uniform(&mut rng, rows, density);
        let y = sparse_uniform(&mut rng, cols, density);
        let w = weight(j);
        for &(i, xi) in &x {
            for &(c, yc) in &y {
                triplets.push((i, c, w * xi * yc));
            }
        }
    }
    // Stable sort inside from_triplets keeps duplicates in term order.
    CsrMatrix::from_triplets(rows, cols, triplets)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_term_full_density_is_rank_one() {
        let p = SynthParams {
            terms: Some(1),
            ..SynthParams::new(2, 2, 1.0, 7)
        };
        let a = synth_sparse(&p).unwrap().to_dense();
        assert_eq!(a.rank(1e-12), 1);
        // Reproduce the draws: x then y, each uniform on all positions.
        let mut g = rng::seeded(7);
        let x = sparse_uniform(&mut g, 2, 1.0);
        let y = sparse_uniform(&mut g, 2, 1.0);
        for &(i, xi) in &x {
            for &(j, yj) in &y {
                assert_eq!(a[(i, j)], 2.0 * xi * yj);
            }
        }
    }

    #[test]
    fn deterministic_and_nonnegative() {
        let p = SynthParams::new(200, 50, DEFAULT_DENSITY, 42);
        let a = synth_sparse(&p).unwrap();
        let b = synth_sparse(&p).unwrap();
        assert_eq!(a, b);
        assert!(a.values().iter().all(|&v| v >= 0.0));
        let c = synth_sparse(&SynthParams { seed: 43, ..p }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(synth_sparse(&SynthParams::new(0, 5, 0.5, 0)).is_err());
        assert!(synth_sparse(&SynthParams::new(5, 5, 0.0, 0)).is_err());
        assert!(synth_sparse(&SynthParams::new(5, 5, 1.5, 0)).is_err());
    }

    #[test]
    fn fill_follows_density() {
        let p = SynthParams::new(4000, 40, DEFAULT_DENSITY, 1);
        let a = synth_sparse(&p).unwrap();
        // Each term contributes exactly 100 x 1 entries before overlaps.
        assert!(a.nnz() <= 40 * 100);
        assert!(a.nnz() > 40 * 100 / 2);
    }
}
