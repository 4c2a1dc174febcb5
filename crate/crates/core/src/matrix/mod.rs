//! Matrix storage, ingestion and the matrix-free operator contract.
//!
//! [`Matrix`] is either a dense column-major array or a CSR matrix. Both
//! implement [`LinearOperator`], which is all the SVD engine ever sees.

mod market;
mod operator;
mod sparse;
mod synth;

use nalgebra::{DMatrix, DVector};

use crate::error::{CurError, Result};

pub use market::{read_matrix_market, read_matrix_market_str, write_matrix_market};
pub use operator::{adjoint_defect, CountingOperator, LinearOperator, Transposed};
pub(crate) use operator::stack_columns;
pub use sparse::CsrMatrix;
pub use synth::{synth_sparse, SynthParams, DEFAULT_DENSITY};

/// Default cap on `rows * cols` for anything that densifies a matrix.
pub const DEFAULT_DENSE_CAP: usize = 50_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum Matrix {
    Dense(DMatrix<f64>),
    Sparse(CsrMatrix),
}

impl From<DMatrix<f64>> for Matrix {
    fn from(a: DMatrix<f64>) -> Self {
        Matrix::Dense(a)
    }
}

impl From<CsrMatrix> for Matrix {
    fn from(a: CsrMatrix) -> Self {
        Matrix::Sparse(a)
    }
}

impl Matrix {
    pub fn nrows(&self) -> usize {
        match self {
            Matrix::Dense(a) => a.nrows(),
            Matrix::Sparse(a) => a.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            Matrix::Dense(a) => a.ncols(),
            Matrix::Sparse(a) => a.ncols(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows(), self.ncols())
    }

    /// Stored entries (all entries for dense storage).
    pub fn nnz(&self) -> usize {
        match self {
            Matrix::Dense(a) => a.len(),
            Matrix::Sparse(a) => a.nnz(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, Matrix::Sparse(_))
    }

    /// `A x`, or `Aᵀ x` when `transpose` is set.
    pub fn matvec(&self, x: &DVector<f64>, transpose: bool) -> Result<DVector<f64>> {
        let expected = if transpose { self.nrows() } else { self.ncols() };
        if x.len() != expected {
            return Err(CurError::DimensionMismatch {
                context: "matvec",
                expected,
                found: x.len(),
            });
        }
        Ok(if transpose {
            self.apply_adjoint(x)
        } else {
            self.apply(x)
        })
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Matrix::Dense(a) => a.clone(),
            Matrix::Sparse(a) => a.to_dense(),
        }
    }

    /// Densifies, refusing when `rows * cols` exceeds `cap`.
    pub fn to_dense_capped(&self, cap: usize) -> Result<DMatrix<f64>> {
        check_cap(self.nrows(), self.ncols(), cap)?;
        Ok(self.to_dense())
    }

    pub fn transpose(&self) -> Matrix {
        match self {
            Matrix::Dense(a) => Matrix::Dense(a.transpose()),
            Matrix::Sparse(a) => Matrix::Sparse(a.transpose()),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        match self {
            Matrix::Dense(a) => a.norm(),
            Matrix::Sparse(a) => a.values().iter().map(|v| v * v).sum::<f64>().sqrt(),
        }
    }

    pub fn column_norms_squared(&self) -> Vec<f64> {
        match self {
            Matrix::Dense(a) => a.column_iter().map(|c| c.norm_squared()).collect(),
            Matrix::Sparse(a) => {
                let mut out = vec![0.0; a.ncols()];
                for (_, j, v) in a.triplets() {
                    out[j] += v * v;
                }
                out
            }
        }
    }

    /// Scales every nonzero row to unit 2-norm. Zero rows are kept as they
    /// are, and the sparsity pattern is unchanged.
    pub fn normalize_rows(&self) -> Matrix {
        match self {
            Matrix::Dense(a) => {
                let mut out = a.clone();
                for i in 0..out.nrows() {
                    let norm = out.row(i).norm();
                    if norm > 0.0 {
                        out.row_mut(i).unscale_mut(norm);
                    }
                }
                Matrix::Dense(out)
            }
            Matrix::Sparse(a) => {
                let norms: Vec<f64> = (0..a.nrows())
                    .map(|i| a.row_entries(i).map(|(_, v)| v * v).sum::<f64>().sqrt())
                    .collect();
                Matrix::Sparse(a.map_values(|i, v| if norms[i] > 0.0 { v / norms[i] } else { v }))
            }
        }
    }
}

pub(crate) fn check_cap(rows: usize, cols: usize, cap: usize) -> Result<()> {
    if rows.saturating_mul(cols) > cap {
        return Err(CurError::SizeCapExceeded { rows, cols, cap });
    }
    Ok(())
}

impl LinearOperator for Matrix {
    fn nrows(&self) -> usize {
        Matrix::nrows(self)
    }
    fn ncols(&self) -> usize {
        Matrix::ncols(self)
    }
    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            Matrix::Dense(a) => a * x,
            Matrix::Sparse(a) => a.mul_vec(x),
        }
    }
    fn apply_adjoint(&self, y: &DVector<f64>) -> DVector<f64> {
        match self {
            Matrix::Dense(a) => a.tr_mul(y),
            Matrix::Sparse(a) => a.tr_mul_vec(y),
        }
    }
    fn apply_block(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Matrix::Dense(a) => a * x,
            Matrix::Sparse(a) => a.mul_dense(x),
        }
    }
    fn apply_adjoint_block(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Matrix::Dense(a) => a.tr_mul(y),
            Matrix::Sparse(a) => a.tr_mul_dense(y),
        }
    }
    fn column(&self, j: usize) -> DVector<f64> {
        match self {
            Matrix::Dense(a) => a.column(j).into_owned(),
            Matrix::Sparse(a) => a.column(j),
        }
    }
    fn row(&self, i: usize) -> DVector<f64> {
        match self {
            Matrix::Dense(a) => a.row(i).transpose(),
            Matrix::Sparse(a) => a.row(i),
        }
    }
    fn columns(&self, p: &[usize]) -> DMatrix<f64> {
        match self {
            Matrix::Dense(a) => a.select_columns(p),
            Matrix::Sparse(a) => {
                let cols: Vec<_> = p.iter().map(|&j| a.column(j)).collect();
                stack_columns(a.nrows(), &cols)
            }
        }
    }
    fn rows(&self, s: &[usize]) -> DMatrix<f64> {
        match self {
            Matrix::Dense(a) => a.select_rows(s),
            Matrix::Sparse(a) => {
                let mut out = DMatrix::zeros(s.len(), a.ncols());
                for (r, &i) in s.iter().enumerate() {
                    for (j, v) in a.row_entries(i) {
                        out[(r, j)] += v;
                    }
                }
                out
            }
        }
    }
}

/// Ordered, duplicate-free list of 0-based indices below `bound`.
#[derive(Debug, Clone, PartialEq, Eq, Default, serde::Serialize)]
pub struct IndexVector {
    entries: Vec<usize>,
    bound: usize,
}

impl IndexVector {
    pub fn new(entries: Vec<usize>, bound: usize) -> Result<Self> {
        let mut seen = vec![false; bound];
        for &i in &entries {
            if i >= bound {
                return Err(CurError::InvalidArgument(format!(
                    "index {i} out of range (bound {bound})"
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(CurError::DuplicateIndex { index: i });
            }
        }
        Ok(Self { entries, bound })
    }

    pub fn empty(bound: usize) -> Self {
        Self {
            entries: Vec::new(),
            bound,
        }
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn bound(&self) -> usize {
        self.bound
    }

    pub fn contains(&self, i: usize) -> bool {
        self.entries.contains(&i)
    }

    /// Appends indices, rejecting duplicates and out-of-range entries.
    pub fn extend(&mut self, more: &[usize]) -> Result<()> {
        let mut all = std::mem::take(&mut self.entries);
        all.extend_from_slice(more);
        *self = Self::new(all, self.bound)?;
        Ok(())
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.entries
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;

    fn random_sparse(m: usize, n: usize, fill: f64, seed: u64) -> CsrMatrix {
        use rand::Rng;
        let mut g = rng::seeded(seed);
        let mut t = Vec::new();
        for i in 0..m {
            for j in 0..n {
                if g.random::<f64>() < fill {
                    t.push((i, j, g.random::<f64>() * 2.0 - 1.0));
                }
            }
        }
        CsrMatrix::from_triplets(m, n, t).unwrap()
    }

    #[test]
    fn identity_matvec() {
        let a = Matrix::Dense(DMatrix::identity(3, 3));
        let x = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert_eq!(a.matvec(&x, false).unwrap(), x);
    }

    #[test]
    fn small_dense_matvec() {
        let a = Matrix::Dense(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        let y = a.matvec(&DVector::from_vec(vec![1.0, 1.0]), false).unwrap();
        assert_eq!(y.as_slice(), &[3.0, 7.0]);
        let z = a.matvec(&DVector::from_vec(vec![1.0, 1.0]), true).unwrap();
        assert_eq!(z.as_slice(), &[4.0, 6.0]);
    }

    #[test]
    fn matvec_dimension_mismatch() {
        let a = Matrix::Dense(DMatrix::identity(3, 2));
        let err = a.matvec(&DVector::zeros(3), false).unwrap_err();
        assert!(matches!(err, CurError::DimensionMismatch { .. }));
    }

    #[test]
    fn sparse_normal_product_matches_dense() {
        let s = random_sparse(100, 80, 0.05, 3);
        let d = s.to_dense();
        let sp = Matrix::Sparse(s);
        let x = rng::gaussian_vector(&mut rng::seeded(4), 80);
        let got = sp.matvec(&sp.matvec(&x, false).unwrap(), true).unwrap();
        let want = d.tr_mul(&(&d * &x));
        assert!((got - &want).norm() <= 1e-12 * want.norm().max(1.0));
    }

    #[test]
    fn sparse_block_products_match_dense() {
        let s = random_sparse(30, 20, 0.2, 8);
        let d = s.to_dense();
        let x = rng::gaussian_matrix(&mut rng::seeded(9), 20, 3);
        let y = rng::gaussian_matrix(&mut rng::seeded(10), 30, 3);
        assert!((s.mul_dense(&x) - &d * &x).norm() < 1e-12);
        assert!((s.tr_mul_dense(&y) - d.tr_mul(&y)).norm() < 1e-12);
        assert_eq!(s.transpose().to_dense(), d.transpose());
    }

    #[test]
    fn triplets_sum_duplicates_and_reject_out_of_range() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(1, 1, 1.0), (0, 0, 2.0), (1, 1, 0.5)]).unwrap();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.to_dense()[(1, 1)], 1.5);
        assert!(CsrMatrix::from_triplets(2, 2, vec![(2, 0, 1.0)]).is_err());
        assert!(CsrMatrix::try_new(1, 3, vec![0, 2], vec![2, 1], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn stored_zeros_do_not_change_products() {
        let with_zero = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 1, 0.0), (1, 1, 2.0)]).unwrap();
        let without = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 1, 2.0)]).unwrap();
        let x = DVector::from_vec(vec![3.0, -1.0]);
        assert_eq!(with_zero.mul_vec(&x), without.mul_vec(&x));
        assert_eq!(with_zero.tr_mul_vec(&x), without.tr_mul_vec(&x));
    }

    #[test]
    fn normalize_three_four_five() {
        let a = Matrix::Dense(DMatrix::from_row_slice(2, 2, &[3.0, 4.0, 0.0, 0.0]));
        let b = a.normalize_rows().to_dense();
        assert!((b[(0, 0)] - 0.6).abs() < 1e-15 && (b[(0, 1)] - 0.8).abs() < 1e-15);
        assert_eq!(b.row(1).norm(), 0.0);
    }

    #[test]
    fn normalize_rows_random_and_sparse_pattern() {
        let mut g = rng::seeded(11);
        let mut d = rng::gaussian_matrix(&mut g, 5, 3);
        d.row_mut(2).fill(0.0);
        let b = Matrix::Dense(d).normalize_rows().to_dense();
        for i in 0..5 {
            let norm = b.row(i).norm();
            assert!(norm.abs() < 1e-14 || (norm - 1.0).abs() < 1e-14);
        }
        let s = random_sparse(40, 10, 0.3, 12);
        let pattern = s.col_idx().to_vec();
        match Matrix::Sparse(s).normalize_rows() {
            Matrix::Sparse(t) => {
                assert_eq!(t.col_idx(), &pattern[..]);
                for i in 0..t.nrows() {
                    let norm: f64 = t.row_entries(i).map(|(_, v)| v * v).sum::<f64>().sqrt();
                    assert!(norm == 0.0 || (norm - 1.0).abs() < 1e-14);
                }
            }
            Matrix::Dense(_) => unreachable!(),
        }
    }

    #[test]
    fn index_vector_rejects_duplicates() {
        assert!(IndexVector::new(vec![0, 2, 1], 3).is_ok());
        assert!(matches!(
            IndexVector::new(vec![0, 0], 3),
            Err(CurError::DuplicateIndex { index: 0 })
        ));
        assert!(IndexVector::new(vec![3], 3).is_err());
    }

    proptest! {
        #[test]
        fn matvec_is_linear(seed in 0u64..1000, alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
            let s = Matrix::Sparse(random_sparse(25, 15, 0.3, seed));
            let mut g = rng::seeded(seed + 1);
            let x = rng::gaussian_vector(&mut g, 15);
            let y = rng::gaussian_vector(&mut g, 15);
            let lhs = s.matvec(&(&x * alpha + &y * beta), false).unwrap();
            let rhs = s.matvec(&x, false).unwrap() * alpha + s.matvec(&y, false).unwrap() * beta;
            prop_assert!((&lhs - &rhs).norm() <= 1e-12 * rhs.norm().max(1.0));
        }

        #[test]
        fn matrices_are_adjoint_consistent(seed in 0u64..1000) {
            let s = Matrix::Sparse(random_sparse(20, 12, 0.3, seed));
            prop_assert!(adjoint_defect(&s, 5, seed) <= 1e-10 * s.frobenius_norm().max(1.0));
        }
    }

    #[test]
    fn repeated_application_is_bitwise_identical() {
        let s = Matrix::Sparse(random_sparse(50, 40, 0.1, 5));
        let x = rng::gaussian_vector(&mut rng::seeded(6), 50);
        assert_eq!(s.apply_adjoint(&x), s.apply_adjoint(&x));
    }
}
