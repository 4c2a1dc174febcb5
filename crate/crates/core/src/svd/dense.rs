use nalgebra::{DMatrix, SVD};

use super::{apply_sign_convention, SvdResult};
use crate::error::{CurError, Result};
use crate::matrix::{check_cap, Matrix};

/// Full reduced SVD of an explicit matrix, refusing inputs with more than
/// `cap` entries.
pub fn dense_svd(a: &Matrix, cap: usize) -> Result<SvdResult> {
    check_cap(a.nrows(), a.ncols(), cap)?;
    dense_svd_matrix(&a.to_dense())
}

/// Full reduced SVD (`r = min(m, n)`) with nonincreasing singular values and
/// the crate sign convention.
pub fn dense_svd_matrix(a: &DMatrix<f64>) -> Result<SvdResult> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Err(CurError::InvalidArgument("empty matrix".into()));
    }
    let svd = SVD::try_new(a.clone(), true, true, 5.0 * f64::EPSILON, 0)
        .ok_or_else(|| CurError::NotConverged("dense SVD iteration failed".into()))?;
    let u_raw = svd.u.expect("requested U");
    let vt_raw = svd.v_t.expect("requested Vᵀ");
    let r = svd.singular_values.len();

    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));

    let mut u = DMatrix::zeros(m, r);
    let mut v = DMatrix::zeros(n, r);
    let mut s = Vec::with_capacity(r);
    for (dst, &src) in order.iter().enumerate() {
        u.set_column(dst, &u_raw.column(src));
        v.set_column(dst, &vt_raw.row(src).transpose());
        s.push(svd.singular_values[src]);
    }
    apply_sign_convention(&mut u, &mut v);
    Ok(SvdResult {
        u,
        s,
        v,
        converged: vec![true; r],
        residual_norm: 0.0,
        matvecs: 0,
        restarts: 0,
        early_stop: false,
        ritz_history: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::orthonormality_defect;
    use crate::rng;
    use nalgebra::{DVector, SymmetricEigen};

    #[test]
    fn diagonal_matrix() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 2.0, 1.0]));
        let r = dense_svd_matrix(&a).unwrap();
        assert_eq!(r.s.len(), 3);
        for (got, want) in r.s.iter().zip([3.0, 2.0, 1.0]) {
            assert!((got - want).abs() < 1e-14);
        }
        for i in 0..3 {
            assert!((r.u[(i, i)].abs() - 1.0).abs() < 1e-14);
            assert!((r.v[(i, i)] - 1.0).abs() < 1e-14, "sign convention");
        }
    }

    #[test]
    fn rank_one_outer_product() {
        let mut g = rng::seeded(1);
        let u = rng::unit_vector(&mut g, 6);
        let v = rng::unit_vector(&mut g, 4);
        let a = &u * v.transpose() * 5.0;
        let r = dense_svd_matrix(&a).unwrap();
        assert!((r.s[0] - 5.0).abs() < 1e-12, "{:?}", r.s);
        let rec = &r.u * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(r.s.clone())) * r.v.transpose();
        assert!((rec - &a).norm() < 1e-12);
        assert!(r.s[1..].iter().all(|&s| s <= 1e-12));
    }

    #[test]
    fn matches_gram_eigenvalues() {
        let a = rng::gaussian_matrix(&mut rng::seeded(30), 30, 20);
        let r = dense_svd_matrix(&a).unwrap();
        let mut eig: Vec<f64> = SymmetricEigen::new(a.tr_mul(&a)).eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect();
        eig.sort_by(|x, y| y.total_cmp(x));
        for (s, e) in r.s.iter().zip(&eig) {
            assert!((s - e).abs() <= 1e-8 * e, "{s} vs {e}");
        }
        let recon = &r.u * DMatrix::from_diagonal(&DVector::from_vec(r.s.clone())) * r.v.transpose();
        assert!((recon - &a).norm() <= 1e-10 * a.norm());
        assert!(orthonormality_defect(&r.u) < 1e-10);
        assert!(orthonormality_defect(&r.v) < 1e-10);
    }

    #[test]
    fn wide_matrix_and_cap() {
        let a = rng::gaussian_matrix(&mut rng::seeded(2), 4, 9);
        let r = dense_svd_matrix(&a).unwrap();
        assert_eq!((r.u.shape(), r.v.shape()), ((4, 4), (9, 4)));
        let err = dense_svd(&Matrix::Dense(a), 10).unwrap_err();
        assert!(matches!(err, CurError::SizeCapExceeded { .. }));
    }
}
