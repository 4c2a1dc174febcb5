//! Small dense kernels shared across modules.

use nalgebra::{DMatrix, DVector, LU, SVD};

/// Index of the largest-magnitude entry; the smallest index wins ties.
pub fn argmax_abs(v: impl IntoIterator<Item = f64>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, x) in v.into_iter().enumerate() {
        let a = x.abs();
        if best.is_none_or(|(_, b)| a > b) {
            best = Some((i, a));
        }
    }
    best
}

/// Singular values in nonincreasing order.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    if a.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = SVD::new(a.clone(), false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// Relative cutoff below which a singular value counts as zero.
pub fn rank_cutoff(m: usize, n: usize) -> f64 {
    m.max(n) as f64 * f64::EPSILON
}

/// Numerical rank: singular values above `rank_cutoff(m, n) · σ₁`.
pub fn numerical_rank(a: &DMatrix<f64>, m: usize, n: usize) -> usize {
    let s = singular_values(a);
    let Some(&top) = s.first() else { return 0 };
    if top == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > rank_cutoff(m, n) * top).count()
}

/// Solves a square system by LU with partial pivoting, returning `None`
/// when a pivot is negligible relative to the largest one.
pub fn lu_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let n = a.nrows();
    if n == 0 {
        return Some(DVector::zeros(0));
    }
    let lu = LU::new(a.clone());
    let u = lu.u();
    let diag = u.diagonal();
    let top = diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let bottom = diag.iter().fold(f64::INFINITY, |m, d| m.min(d.abs()));
    if top == 0.0 || bottom <= n as f64 * f64::EPSILON * top {
        return None;
    }
    lu.solve(b)
}

/// `max |QᵀQ − I|`.
pub fn orthonormality_defect(q: &DMatrix<f64>) -> f64 {
    let g = q.tr_mul(q);
    let mut worst: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}
