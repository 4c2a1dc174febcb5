use super::Backend;
use crate::cur::CurFactorization;
use crate::error::Result;
use crate::matrix::{Matrix, DEFAULT_DENSE_CAP};
use crate::select::{select_rows, volume_sampling, SelectionMethod};
use crate::svd::{dense_svd, svds, SvdConfig};

#[derive(Debug, Clone)]
pub struct OneRoundOutcome {
    pub factorization: CurFactorization,
    pub matvecs: usize,
    pub svd_converged: bool,
    pub warnings: Vec<String>,
}

/// All `k` columns and rows from one SVD of `A`.
pub fn one_round_cur(
    a: &Matrix,
    k: usize,
    method: SelectionMethod,
    backend: Backend,
    svd_tol: f64,
    seed: u64,
) -> Result<OneRoundOutcome> {
    let svd = match backend.resolve(a) {
        Backend::Dense => dense_svd(a, DEFAULT_DENSE_CAP)?.truncated(k),
        _ => svds(a, &SvdConfig::new(k).with_tol(svd_tol).with_seed(seed))?,
    };
    let p = select_rows(&svd.v.columns(0, k).into_owned(), method)?;
    let s = select_rows(&svd.u.columns(0, k).into_owned(), method)?;
    Ok(OneRoundOutcome {
        factorization: CurFactorization::new(a, p.indices.as_slice(), s.indices.as_slice())?,
        matvecs: svd.matvecs,
        svd_converged: svd.all_converged(),
        warnings: Vec::new(),
    })
}

/// Volume sampling for columns on `A` and for rows on `Aᵀ`.
pub fn volume_cur(a: &Matrix, k: usize, t: usize, c: usize, seed: u64) -> Result<OneRoundOutcome> {
    let cols = volume_sampling(a, k, t, c, seed)?;
    let rows = volume_sampling(&a.transpose(), k, t, c, seed.wrapping_add(1))?;
    let warnings = cols.warning.into_iter().chain(rows.warning).collect();
    Ok(OneRoundOutcome {
        factorization: CurFactorization::new(a, &cols.indices, &rows.indices)?,
        matvecs: 0,
        svd_converged: true,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn diagonal_truncation() {
        let a = Matrix::Dense(DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 2.0, 1.0])));
        let out = one_round_cur(&a, 2, SelectionMethod::Deim, Backend::Dense, 1e-10, 0).unwrap();
        let mut p = out.factorization.p.as_slice().to_vec();
        p.sort_unstable();
        assert_eq!(p, vec![0, 1]);
    }

    #[test]
    fn backends_select_alike() {
        let a = Matrix::Dense(rng::gaussian_matrix(&mut rng::seeded(2), 40, 30));
        for method in [SelectionMethod::Deim, SelectionMethod::Qdeim, SelectionMethod::Maxvol] {
            let d = one_round_cur(&a, 5, method, Backend::Dense, 1e-12, 0).unwrap();
            let k = one_round_cur(&a, 5, method, Backend::Krylov, 1e-12, 0).unwrap();
            assert_eq!(d.factorization.p, k.factorization.p, "{method:?}");
            assert_eq!(d.factorization.s, k.factorization.s, "{method:?}");
        }
    }

    #[test]
    fn volume_cur_is_seeded() {
        let a = Matrix::Dense(rng::gaussian_matrix(&mut rng::seeded(3), 20, 15));
        let x = volume_cur(&a, 4, 2, 2, 5).unwrap();
        let y = volume_cur(&a, 4, 2, 2, 5).unwrap();
        assert_eq!(x.factorization.p, y.factorization.p);
        assert_eq!(x.factorization.s, y.factorization.s);
        assert_eq!(x.factorization.rank(), 4);
    }
}
