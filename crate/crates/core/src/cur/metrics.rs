use nalgebra::DMatrix;
use serde::Serialize;

use super::{CurFactorization, CurResidualOperator};
use crate::error::{CurError, Result};
use crate::linalg::{rank_cutoff, singular_values, spectral_norm};
use crate::matrix::{check_cap, LinearOperator, Matrix, DEFAULT_DENSE_CAP};
use crate::svd::{dense_svd_matrix, svds, SvdConfig};

/// How to evaluate `‖A − CMR‖₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorMode {
    /// Largest singular value of the explicit difference.
    Dense,
    /// Lanczos on `x ↦ Ax − C(M(Rx))` and its adjoint.
    Operator,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormEstimate {
    pub value: f64,
    pub converged: bool,
    pub matvecs: usize,
}

/// Roughly 5000 operator applications at the default subspace size of 12.
const NORM_MAX_RESTARTS: usize = 400;

/// `‖E‖₂` from a one-triplet Lanczos run.
pub fn operator_norm<O: LinearOperator + ?Sized>(op: &O, seed: u64) -> Result<NormEstimate> {
    if op.nrows() == 0 || op.ncols() == 0 {
        return Ok(NormEstimate {
            value: 0.0,
            converged: true,
            matvecs: 0,
        });
    }
    let mut cfg = SvdConfig::new(1).with_tol(1e-8).with_seed(seed);
    cfg.max_restarts = NORM_MAX_RESTARTS;
    let res = svds(op, &cfg)?;
    Ok(NormEstimate {
        value: res.sigma1(),
        converged: res.all_converged(),
        matvecs: res.matvecs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralError {
    pub absolute: f64,
    pub relative: f64,
    /// `‖A‖₂`, the denominator of `relative`.
    pub norm_a: f64,
    /// False if an operator-mode estimate hit its iteration limit.
    pub converged: bool,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 { 0.0 } else { f64::INFINITY }
    } else {
        num / den
    }
}

/// Absolute and relative spectral error of a factorization. A known
/// `norm_a` skips recomputing `‖A‖₂`.
pub fn spectral_error(
    a: &Matrix,
    fact: &CurFactorization,
    mode: ErrorMode,
    norm_a: Option<f64>,
) -> Result<SpectralError> {
    match mode {
        ErrorMode::Dense => {
            check_cap(a.nrows(), a.ncols(), DEFAULT_DENSE_CAP)?;
            let dense = a.to_dense();
            let absolute = spectral_norm(&(&dense - fact.reconstruct()));
            let norm_a = norm_a.unwrap_or_else(|| spectral_norm(&dense));
            Ok(SpectralError {
                absolute,
                relative: ratio(absolute, norm_a),
                norm_a,
                converged: true,
            })
        }
        ErrorMode::Operator => {
            let diff = CurResidualOperator::new(a, &fact.c, &fact.m, &fact.r)?;
            let e = operator_norm(&diff, 0)?;
            let (norm_a, a_ok) = match norm_a {
                Some(v) => (v, true),
                None => {
                    let est = operator_norm(a, 0)?;
                    (est.value, est.converged)
                }
            };
            Ok(SpectralError {
                absolute: e.value,
                relative: ratio(e.value, norm_a),
                norm_a,
                converged: e.converged && a_ok,
            })
        }
    }
}

/// `(‖A − CMR‖_F, ‖A − CMR‖_F / ‖A‖_F)`.
///
/// Inputs above the dense cap use
/// `‖A‖² − 2⟨M, CᵀARᵀ⟩ + ⟨M, CᵀC M RRᵀ⟩` instead of forming the difference.
pub fn frobenius_error(a: &Matrix, fact: &CurFactorization) -> (f64, f64) {
    let fa = a.frobenius_norm();
    let absolute = if check_cap(a.nrows(), a.ncols(), DEFAULT_DENSE_CAP).is_ok() {
        (a.to_dense() - fact.reconstruct()).norm()
    } else {
        let art = a.apply_block(&fact.r.transpose());
        let cross = fact.m.dot(&fact.c.tr_mul(&art));
        let gc = fact.c.tr_mul(&fact.c);
        let gr = &fact.r * fact.r.transpose();
        let own = fact.m.dot(&(gc * &fact.m * gr));
        (fa * fa - 2.0 * cross + own).max(0.0).sqrt()
    };
    (absolute, ratio(absolute, fa))
}

/// Quantities in the error bound `‖A − CMR‖₂ ≤ (η_s + η_p)·σ_{k+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurDiagnostics {
    /// `‖(V_kᵀP)⁻¹‖₂`.
    pub eta_p: f64,
    /// `‖(SᵀU_k)⁻¹‖₂`.
    pub eta_s: f64,
    pub sigma1: f64,
    pub sigma_kplus1: f64,
    pub bound: f64,
    pub achieved: f64,
    /// `√(nk/3)·2ᵏ`.
    pub cap_nk: f64,
    /// `√(mk/3)·2ᵏ`.
    pub cap_mk: f64,
}

impl CurDiagnostics {
    /// `achieved ≤ bound` up to `1e-10·σ₁` of rounding.
    pub fn bound_holds(&self) -> bool {
        self.achieved <= self.bound + 1e-10 * self.sigma1
    }
}

fn inverse_norm(block: &DMatrix<f64>, which: &'static str, dims: (usize, usize)) -> Result<f64> {
    let s = singular_values(block);
    let (Some(&top), Some(&low)) = (s.first(), s.last()) else {
        return Err(CurError::SingularSelection { which });
    };
    if !(low > rank_cutoff(dims.0, dims.1) * top) {
        return Err(CurError::SingularSelection { which });
    }
    Ok(1.0 / low)
}

/// Evaluates the bound for an explicit `a` using its leading `k` singular
/// vectors, `k = |p| = |s|`.
pub fn theorem_bound(a: &DMatrix<f64>, fact: &CurFactorization) -> Result<CurDiagnostics> {
    let k = fact.rank();
    if fact.s.len() != k {
        return Err(CurError::InvalidArgument(format!(
            "bound needs |p| = |s|, got {} and {}",
            k,
            fact.s.len()
        )));
    }
    let (m, n) = a.shape();
    let svd = dense_svd_matrix(a)?;
    let vp = svd.v.columns(0, k).select_rows(fact.p.as_slice());
    let us = svd.u.columns(0, k).select_rows(fact.s.as_slice());
    let eta_p = inverse_norm(&vp, "V_k(p,:)", (m, n))?;
    let eta_s = inverse_norm(&us, "U_k(s,:)", (m, n))?;
    let sigma_kplus1 = svd.s.get(k).copied().unwrap_or(0.0);
    let growth = 2f64.powi(k as i32);
    Ok(CurDiagnostics {
        eta_p,
        eta_s,
        sigma1: svd.sigma1(),
        sigma_kplus1,
        bound: (eta_p + eta_s) * sigma_kplus1,
        achieved: spectral_norm(&(a - fact.reconstruct())),
        cap_nk: (n as f64 * k as f64 / 3.0).sqrt() * growth,
        cap_mk: (m as f64 * k as f64 / 3.0).sqrt() * growth,
    })
}
