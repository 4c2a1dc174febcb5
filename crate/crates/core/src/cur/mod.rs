//! CUR assembly: middle matrices, interpolative decompositions, residuals
//! and error metrics.

mod incremental;
mod metrics;
mod residual;

use nalgebra::DMatrix;

pub use incremental::IncrementalQr;
pub use metrics::{
    frobenius_error, operator_norm, spectral_error, theorem_bound, CurDiagnostics, ErrorMode,
    NormEstimate, SpectralError,
};
pub use residual::{CurResidualOperator, ResidualOperator};

use crate::error::{CurError, Factor, Result};
use crate::linalg::numerical_rank;
use crate::matrix::{check_cap, IndexVector, LinearOperator, Matrix};

/// `A ≈ C M R` with `C = A(:,p)` and `R = A(s,:)`.
#[derive(Debug, Clone)]
pub struct CurFactorization {
    pub p: IndexVector,
    pub s: IndexVector,
    pub c: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub m: DMatrix<f64>,
}

impl CurFactorization {
    /// Selects `C` and `R` from `a` and forms `M = C⁺AR⁺`.
    pub fn new<O: LinearOperator + ?Sized>(a: &O, p: &[usize], s: &[usize]) -> Result<Self> {
        let p = IndexVector::new(p.to_vec(), a.ncols())?;
        let s = IndexVector::new(s.to_vec(), a.nrows())?;
        let c = a.columns(p.as_slice());
        let r = a.rows(s.as_slice());
        let m = middle_from_blocks(a, &c, &r)?;
        Ok(Self { p, s, c, r, m })
    }

    pub fn rank(&self) -> usize {
        self.p.len()
    }

    /// The dense product `C M R`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.c * (&self.m * &self.r)
    }
}

/// Thin QR of a block that must have full column rank.
pub(crate) fn full_rank_qr(
    block: &DMatrix<f64>,
    factor: Factor,
    dims: (usize, usize),
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (rows, k) = block.shape();
    if k > rows {
        return Err(CurError::RankDeficient {
            factor,
            rank: rows,
            expected: k,
        });
    }
    let qr = block.clone().qr();
    let t = qr.r();
    let rank = if k == 0 { 0 } else { numerical_rank(&t, dims.0, dims.1) };
    if rank < k {
        return Err(CurError::RankDeficient {
            factor,
            rank,
            expected: k,
        });
    }
    Ok((qr.q(), t))
}

fn solve_upper(t: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    t.solve_upper_triangular(b)
        .ok_or_else(|| CurError::NotConverged("triangular solve hit a zero pivot".into()))
}

fn middle_from_blocks<O: LinearOperator + ?Sized>(
    a: &O,
    c: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let dims = (a.nrows(), a.ncols());
    let (qc, tc) = full_rank_qr(c, Factor::C, dims)?;
    let (qr, tr) = full_rank_qr(&r.transpose(), Factor::R, dims)?;
    // M = Tc⁻¹ (Qcᵀ A Qr) Tr⁻ᵀ
    let core = qc.tr_mul(&a.apply_block(&qr));
    let left = solve_upper(&tc, &core)?;
    Ok(solve_upper(&tr, &left.transpose())?.transpose())
}

/// `M = C⁺AR⁺` by two least-squares solves through QR factors of `C` and `Rᵀ`.
pub fn middle_matrix<O: LinearOperator + ?Sized>(
    a: &O,
    p: &[usize],
    s: &[usize],
) -> Result<DMatrix<f64>> {
    IndexVector::new(p.to_vec(), a.ncols())?;
    IndexVector::new(s.to_vec(), a.nrows())?;
    middle_from_blocks(a, &a.columns(p), &a.rows(s))
}

/// `X = argmin ‖CX − A‖_F` with `C = A(:,p)`.
pub fn interpolative_cx<O: LinearOperator + ?Sized>(a: &O, p: &[usize]) -> Result<DMatrix<f64>> {
    IndexVector::new(p.to_vec(), a.ncols())?;
    let (q, t) = full_rank_qr(&a.columns(p), Factor::C, (a.nrows(), a.ncols()))?;
    solve_upper(&t, &a.apply_adjoint_block(&q).transpose())
}

/// Explicit `E = A − C X`.
pub fn residual_cx(a: &Matrix, p: &[usize], cap: usize) -> Result<DMatrix<f64>> {
    check_cap(a.nrows(), a.ncols(), cap)?;
    let x = interpolative_cx(a, p)?;
    let dense = a.to_dense();
    let c = dense.select_columns(p);
    Ok(dense - c * x)
}

/// Explicit `E = A − C M R`.
pub fn residual_cur(a: &Matrix, p: &[usize], s: &[usize], cap: usize) -> Result<DMatrix<f64>> {
    check_cap(a.nrows(), a.ncols(), cap)?;
    let fact = CurFactorization::new(a, p, s)?;
    Ok(a.to_dense() - fact.reconstruct())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{singular_values, spectral_norm};
    use crate::matrix::DEFAULT_DENSE_CAP;
    use crate::rng;
    use nalgebra::DVector;
    use proptest::prelude::*;

    /// Pseudoinverse from a dense SVD with the crate rank cutoff.
    fn pinv(a: &DMatrix<f64>) -> DMatrix<f64> {
        let svd = a.clone().svd(true, true);
        let top = svd.singular_values.max();
        let cut = a.nrows().max(a.ncols()) as f64 * f64::EPSILON * top;
        let inv = svd.singular_values.map(|s| if s > cut { 1.0 / s } else { 0.0 });
        svd.v_t.unwrap().transpose() * DMatrix::from_diagonal(&inv) * svd.u.unwrap().transpose()
    }

    fn low_rank(m: usize, n: usize, k: usize, seed: u64) -> DMatrix<f64> {
        let mut g = rng::seeded(seed);
        rng::gaussian_matrix(&mut g, m, k) * rng::gaussian_matrix(&mut g, k, n)
    }

    fn fixed_6x5() -> DMatrix<f64> {
        rng::gaussian_matrix(&mut rng::seeded(65), 6, 5)
    }

    #[test]
    fn square_all_indices_gives_inverse() {
        let a = rng::gaussian_matrix(&mut rng::seeded(3), 4, 4);
        let all = [0, 1, 2, 3];
        let fact = CurFactorization::new(&a, &all, &all).unwrap();
        let inv = a.clone().try_inverse().unwrap();
        assert!((&fact.m - &inv).norm() <= 1e-10 * inv.norm());
        assert!((fact.reconstruct() - &a).norm() <= 1e-12 * a.norm() * 10.0);
    }

    #[test]
    fn exact_rank_recovery() {
        let a = low_rank(12, 9, 3, 8);
        let fact = CurFactorization::new(&a, &[0, 4, 7], &[1, 5, 10]).unwrap();
        assert!((fact.reconstruct() - &a).norm() <= 1e-10 * a.norm());
    }

    #[test]
    fn matches_pseudoinverse_product() {
        let a = fixed_6x5();
        let (p, s) = ([1, 3], [0, 4]);
        let m = middle_matrix(&a, &p, &s).unwrap();
        let c = a.select_columns(&p);
        let r = a.select_rows(&s);
        let oracle = pinv(&c) * &a * pinv(&r);
        assert!((m - oracle).amax() <= 1e-10);
    }

    #[test]
    fn selection_is_exact() {
        let a = fixed_6x5();
        let fact = CurFactorization::new(&a, &[4, 0], &[5, 2]).unwrap();
        assert_eq!(fact.c, a.select_columns(&[4, 0]));
        assert_eq!(fact.r, a.select_rows(&[5, 2]));
    }

    #[test]
    fn rank_deficient_factor_named() {
        let mut a = fixed_6x5();
        let col = a.column(0).into_owned();
        a.set_column(1, &(col * 2.0));
        match middle_matrix(&a, &[0, 1], &[0, 1]) {
            Err(CurError::RankDeficient { factor, .. }) => assert_eq!(factor, Factor::C),
            other => panic!("unexpected {other:?}"),
        }
        let mut b = fixed_6x5();
        let row = b.row(2).into_owned();
        b.set_row(3, &(row * -1.0));
        match middle_matrix(&b, &[0, 1], &[2, 3]) {
            Err(CurError::RankDeficient { factor, .. }) => assert_eq!(factor, Factor::R),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn interpolative_identity_and_rank_one() {
        let a = fixed_6x5();
        let x = interpolative_cx(&a, &[0, 1, 2, 3, 4]).unwrap();
        assert!((x - DMatrix::<f64>::identity(5, 5)).amax() <= 1e-12);

        let c = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let w = DVector::from_vec(vec![3.0, 0.0, -1.0, 2.0]);
        let r1 = &c * w.transpose();
        let x = interpolative_cx(&r1, &[3]).unwrap();
        let expect = w.transpose() / w[3];
        assert!((x - expect).amax() <= 1e-14);
    }

    #[test]
    fn interpolative_normal_equations() {
        let a = rng::gaussian_matrix(&mut rng::seeded(74), 7, 4);
        let p = [1, 2];
        let x = interpolative_cx(&a, &p).unwrap();
        let c = a.select_columns(&p);
        assert!((c.transpose() * (&a - &c * x)).amax() <= 1e-10);
    }

    #[test]
    fn residuals() {
        let a = Matrix::Dense(fixed_6x5());
        let all: Vec<usize> = (0..5).collect();
        assert!(residual_cx(&a, &all, DEFAULT_DENSE_CAP).unwrap().amax() <= 1e-12);

        let e_cx = residual_cx(&a, &[1, 3], DEFAULT_DENSE_CAP).unwrap();
        let e_cur = residual_cur(&a, &[1, 3], &[0, 4], DEFAULT_DENSE_CAP).unwrap();
        assert!(e_cur.norm() >= e_cx.norm());

        let lr = Matrix::Dense(low_rank(10, 8, 2, 4));
        let e = residual_cur(&lr, &[0, 1], &[0, 1], DEFAULT_DENSE_CAP).unwrap();
        assert!(e.norm() <= 1e-10 * lr.frobenius_norm());

        assert!(matches!(
            residual_cx(&a, &[0], 10),
            Err(CurError::SizeCapExceeded { .. })
        ));
    }

    #[test]
    fn sparse_and_dense_agree() {
        let d = low_rank(15, 10, 4, 9).map(|x| if x > 0.0 { x } else { 0.0 });
        let s = Matrix::Sparse(crate::matrix::CsrMatrix::from_dense(&d));
        let (p, r) = ([0, 2, 5], [1, 3, 8]);
        let md = middle_matrix(&d, &p, &r).unwrap();
        let ms = middle_matrix(&s, &p, &r).unwrap();
        assert!((md - ms).amax() <= 1e-10);
    }

    #[test]
    fn perturbing_middle_never_helps() {
        use rand::Rng;
        for seed in 0..20u64 {
            let mut g = rng::seeded(1000 + seed);
            let a = rng::gaussian_matrix(&mut g, 9, 7);
            let p = [g.random_range(0..3), 3 + g.random_range(0..4)];
            let s = [g.random_range(0..4), 4 + g.random_range(0..5)];
            let fact = CurFactorization::new(&a, &p, &s).unwrap();
            let base = (&a - fact.reconstruct()).norm();
            for _ in 0..10 {
                let mut dm = rng::gaussian_matrix(&mut g, 2, 2);
                dm *= 1e-3 * fact.m.norm() / dm.norm();
                let e = &a - &fact.c * (&fact.m + dm) * &fact.r;
                assert!(e.norm() >= base);
            }
        }
    }

    proptest! {
        #[test]
        fn cur_error_bounded_by_frobenius_and_singular_values(seed in 0u64..200) {
            let a = rng::gaussian_matrix(&mut rng::seeded(seed), 8, 6);
            let fact = CurFactorization::new(&a, &[0, 2], &[1, 5]).unwrap();
            let e = &a - fact.reconstruct();
            prop_assert!(spectral_norm(&e) <= e.norm() * (1.0 + 1e-12));
            // CMR has rank 2, so the error is at least σ₃(A).
            prop_assert!(spectral_norm(&e) >= singular_values(&a)[2] * (1.0 - 1e-10));
        }
    }
}
