//! One-round index selection.
//!
//! The deterministic schemes work on a block of singular vectors: [`deim`],
//! [`qdeim`] and [`maxvol`]. The randomized ones draw from a
//! [`SamplingDistribution`], either leverage scores or residual squared
//! column norms ([`volume_sampling`]).

mod deim;
mod maxvol;
mod qdeim;
mod sampling;

use nalgebra::DMatrix;
use serde::Serialize;

pub use deim::{deim, deim_with_fallback, deim_with_residuals, DeimOutcome};
pub use maxvol::{maxvol, MaxvolOutcome, DEFAULT_MAX_SWEEPS, DEFAULT_SWAP_TOL};
pub use qdeim::qdeim;
pub use sampling::{
    leverage_scores, sample_distribution, sample_with, volume_sampling, SamplingDistribution,
    VolumeSamplingOutcome,
};

use crate::error::Result;
use crate::matrix::IndexVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMethod {
    Deim,
    Qdeim,
    Maxvol,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelectionResult {
    pub indices: IndexVector,
    pub method: SelectionMethod,
    /// `|U(s_j, j)|`-style magnitudes behind each pick, when the method has them.
    pub scores: Option<Vec<f64>>,
}

/// Runs a deterministic scheme on `u` and wraps the result.
pub fn select_rows(u: &DMatrix<f64>, method: SelectionMethod) -> Result<SelectionResult> {
    let (indices, scores) = match method {
        SelectionMethod::Deim => {
            let out = deim_with_residuals(u, None)?;
            let scores = out
                .indices
                .iter()
                .enumerate()
                .map(|(j, &i)| out.residuals[(i, j)].abs())
                .collect();
            (out.indices, Some(scores))
        }
        SelectionMethod::Qdeim => (qdeim(u)?, None),
        SelectionMethod::Maxvol => {
            let out = maxvol(u, None, DEFAULT_SWAP_TOL, DEFAULT_MAX_SWEEPS)?;
            (out.indices, None)
        }
    };
    Ok(SelectionResult {
        indices: IndexVector::new(indices, u.nrows())?,
        method,
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;

    #[test]
    fn wrapped_results_are_valid() {
        let q = rng::gaussian_matrix(&mut rng::seeded(1), 20, 4).qr().q();
        for method in [SelectionMethod::Deim, SelectionMethod::Qdeim, SelectionMethod::Maxvol] {
            let r = select_rows(&q, method).unwrap();
            assert_eq!(r.indices.len(), 4);
        }
    }

    proptest! {
        #[test]
        fn single_column_methods_agree(v in proptest::collection::vec(-10.0f64..10.0, 2..30)) {
            let u = DMatrix::from_column_slice(v.len(), 1, &v);
            let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
            mags.sort_by(|a, b| b.total_cmp(a));
            prop_assume!(mags[0] > mags[1] && mags[0] > 0.0);
            let d = deim(&u, None).unwrap();
            prop_assert_eq!(&d, &qdeim(&u).unwrap());
            prop_assert_eq!(&d, &maxvol(&u, None, DEFAULT_SWAP_TOL, DEFAULT_MAX_SWEEPS).unwrap().indices);
        }

        #[test]
        fn selected_blocks_are_nonsingular(seed in 0u64..200, m in 4usize..25, k in 1usize..4) {
            let q = rng::gaussian_matrix(&mut rng::seeded(seed), m, k).qr().q();
            for method in [SelectionMethod::Deim, SelectionMethod::Qdeim, SelectionMethod::Maxvol] {
                let r = select_rows(&q, method).unwrap();
                let lu = q.select_rows(r.indices.as_slice()).lu();
                prop_assert!(lu.determinant().abs() > 0.0);
            }
        }
    }
}
