//! Singular value decompositions.
//!
//! [`dense_svd`] factors a small explicit matrix completely. [`svds`]
//! computes a few leading triplets of any [`LinearOperator`] by implicitly
//! restarted Lanczos bidiagonalization in Krylov–Schur form, touching the
//! operator only through forward and adjoint matvecs.
//!
//! [`LinearOperator`]: crate::matrix::LinearOperator

mod dense;
mod krylov;
mod wedin;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

pub use dense::{dense_svd, dense_svd_matrix};
pub use krylov::{svds, BidiagState, RitzPairs};
pub use wedin::wedin_gap_stop;

use crate::error::{CurError, Result};

#[derive(Debug, Clone)]
pub struct SvdResult {
    /// `m × r`, orthonormal columns.
    pub u: DMatrix<f64>,
    /// Nonincreasing.
    pub s: Vec<f64>,
    /// `n × r`, orthonormal columns.
    pub v: DMatrix<f64>,
    pub converged: Vec<bool>,
    /// `β‖f_k‖` at termination (zero for the dense path).
    pub residual_norm: f64,
    /// Forward plus adjoint operator applications.
    pub matvecs: usize,
    pub restarts: usize,
    /// Set when the Wedin gap rule released the leading vector early.
    pub early_stop: bool,
    /// Leading Ritz values after each restart.
    pub ritz_history: Vec<Vec<f64>>,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    pub fn sigma1(&self) -> f64 {
        self.s.first().copied().unwrap_or(0.0)
    }

    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }

    /// The leading `c` triplets.
    pub fn truncated(&self, c: usize) -> SvdResult {
        let c = c.min(self.rank());
        SvdResult {
            u: self.u.columns(0, c).into_owned(),
            s: self.s[..c].to_vec(),
            v: self.v.columns(0, c).into_owned(),
            converged: self.converged[..c].to_vec(),
            ..self.clone()
        }
    }

    /// Swaps the roles of `u` and `v` (the SVD of the transpose).
    pub fn transposed(&self) -> SvdResult {
        let mut out = SvdResult {
            u: self.v.clone(),
            v: self.u.clone(),
            ..self.clone()
        };
        apply_sign_convention(&mut out.u, &mut out.v);
        out
    }
}

/// Threshold rule on singular value decay: count the leading values with
/// `σ_i ≥ δσ₁` (or `>` in strict mode), capped at `cap`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayGate {
    pub delta: f64,
    pub cap: usize,
    pub strict: bool,
}

impl DecayGate {
    pub fn new(delta: f64, cap: usize) -> Self {
        Self {
            delta,
            cap,
            strict: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(CurError::InvalidArgument(format!(
                "decay threshold must lie in [0, 1], got {}",
                self.delta
            )));
        }
        if self.cap == 0 {
            return Err(CurError::InvalidArgument("decay cap must be at least 1".into()));
        }
        Ok(())
    }

    pub(crate) fn passes(&self, sigma: f64, sigma1: f64) -> bool {
        let threshold = self.delta * sigma1;
        if self.strict {
            sigma > threshold
        } else {
            sigma >= threshold
        }
    }

    /// Number of indices to take this round, `c = min(b, cap)`, where `b` is
    /// the last index `i ≤ limit` passing the threshold.
    ///
    /// Only the first `trusted` values are considered reliable. Returns
    /// `None` when they do not yet determine `c`. A zero `b` (possible only
    /// in strict mode) is raised to one so selection always progresses.
    pub fn count(&self, sigma: &[f64], trusted: usize, limit: usize) -> Option<usize> {
        let horizon = limit.min(self.cap);
        let trusted = trusted.min(sigma.len());
        if horizon == 0 || trusted == 0 {
            return None;
        }
        let sigma1 = sigma[0];
        for (i, &s) in sigma.iter().take(trusted.min(horizon)).enumerate() {
            if !self.passes(s, sigma1) {
                return Some(i.max(1));
            }
        }
        if trusted >= horizon || trusted == sigma.len() {
            Some(horizon.min(sigma.len()).max(1))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone)]
pub struct SvdConfig {
    /// Number of leading triplets wanted (the `limit` for a decay gate).
    pub k: usize,
    /// Maximum subspace dimension; defaults to `2k + 10` capped at `min(m, n)`.
    pub max_dim: Option<usize>,
    /// Convergence tolerance on `|β f_i|`, relative to the current `σ̂₁`.
    pub tol: f64,
    /// Absolute floor under `tol · σ̂₁`, for operators known to be tiny
    /// relative to some outer scale.
    pub abs_tol: f64,
    pub max_restarts: usize,
    pub seed: u64,
    /// Starting right vector; a seeded random unit vector when absent.
    pub start: Option<DVector<f64>>,
    pub gate: Option<DecayGate>,
    pub wedin_early_stop: bool,
}

impl SvdConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            max_dim: None,
            tol: 1e-8,
            abs_tol: 0.0,
            max_restarts: 300,
            seed: 0,
            start: None,
            gate: None,
            wedin_early_stop: false,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_gate(mut self, gate: DecayGate) -> Self {
        self.gate = Some(gate);
        self
    }
}

/// Flips each pair `(u_i, v_i)` so the largest-magnitude entry of `v_i`
/// (smallest index on ties) is positive.
pub(crate) fn apply_sign_convention(u: &mut DMatrix<f64>, v: &mut DMatrix<f64>) {
    for i in 0..v.ncols() {
        let Some((idx, _)) = crate::linalg::argmax_abs(v.column(i).iter().copied()) else {
            continue;
        };
        if v[(idx, i)] < 0.0 {
            v.column_mut(i).neg_mut();
            if i < u.ncols() {
                u.column_mut(i).neg_mut();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gate_counts_decay() {
        let g = DecayGate::new(0.8, 3);
        let s = [10.0, 9.0, 7.0, 6.0];
        assert_eq!(g.count(&s, 4, 4), Some(2));
        assert_eq!(g.count(&s, 1, 4), None);
        assert_eq!(g.count(&s, 3, 4), Some(2));
        assert_eq!(DecayGate::new(0.5, 3).count(&s, 4, 4), Some(3));
        assert_eq!(DecayGate::new(0.5, 10).count(&s, 4, 2), Some(2));
        // δ = 0 degenerates to "take everything up to the cap".
        assert_eq!(DecayGate::new(0.0, 10).count(&s, 4, 4), Some(4));
    }

    #[test]
    fn strict_gate_forces_progress() {
        let g = DecayGate {
            delta: 1.0,
            cap: 5,
            strict: true,
        };
        assert_eq!(g.count(&[3.0, 2.0], 2, 2), Some(1));
        assert_eq!(DecayGate::new(1.0, 5).count(&[3.0, 3.0, 1.0], 3, 3), Some(2));
    }

    #[test]
    fn gate_validation() {
        assert!(DecayGate::new(1.2, 1).validate().is_err());
        assert!(DecayGate::new(0.5, 0).validate().is_err());
        assert!(DecayGate::new(0.0, 1).validate().is_ok());
    }
}
