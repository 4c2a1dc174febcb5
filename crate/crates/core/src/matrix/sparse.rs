use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::error::{CurError, Result};

/// Compressed-sparse-rows storage with a lazily built compressed-sparse-columns
/// view used for `Aᵀx`.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    csc: OnceLock<CscView>,
}

#[derive(Debug, Clone)]
struct CscView {
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl PartialEq for CsrMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.row_ptr == other.row_ptr
            && self.col_idx == other.col_idx
            && self.values == other.values
    }
}

impl CsrMatrix {
    /// Builds from raw CSR arrays, checking every structural invariant.
    pub fn try_new(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if nrows == 0 || ncols == 0 {
            return Err(CurError::InvalidArgument(
                "matrix dimensions must be positive".into(),
            ));
        }
        if row_ptr.len() != nrows + 1 {
            return Err(CurError::DimensionMismatch {
                context: "CSR row pointer length",
                expected: nrows + 1,
                found: row_ptr.len(),
            });
        }
        if col_idx.len() != values.len() || row_ptr[nrows] != values.len() || row_ptr[0] != 0 {
            return Err(CurError::InvalidArgument(
                "CSR arrays have inconsistent lengths".into(),
            ));
        }
        for i in 0..nrows {
            if row_ptr[i] > row_ptr[i + 1] {
                return Err(CurError::InvalidArgument(format!(
                    "row pointer decreases at row {i}"
                )));
            }
            let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(CurError::InvalidArgument(format!(
                    "column indices not strictly increasing in row {i}"
                )));
            }
            if cols.last().is_some_and(|&j| j >= ncols) {
                return Err(CurError::InvalidArgument(format!(
                    "column index out of range in row {i}"
                )));
            }
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
            csc: OnceLock::new(),
        })
    }

    /// Builds from `(row, col, value)` triplets. Duplicates are summed in
    /// input order, so the result is deterministic.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        if nrows == 0 || ncols == 0 {
            return Err(CurError::InvalidArgument(
                "matrix dimensions must be positive".into(),
            ));
        }
        if let Some(&(i, j, _)) = triplets.iter().find(|t| t.0 >= nrows || t.1 >= ncols) {
            return Err(CurError::InvalidArgument(format!(
                "entry ({i}, {j}) outside a {nrows}x{ncols} matrix"
            )));
        }
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx: Vec<usize> = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            last = Some((i, j));
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            values.push(v);
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self::try_new(nrows, ncols, row_ptr, col_idx, values)
    }

    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        let mut triplets = Vec::new();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                let v = a[(i, j)];
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(a.nrows().max(1), a.ncols().max(1), triplets)
            .expect("dense matrix yields valid CSR")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterates `(col, value)` over the stored entries of row `i`.
    pub fn row_entries(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    /// Iterates `(row, col, value)` in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row_entries(i).map(move |(j, v)| (i, j, v)))
    }

    fn csc(&self) -> &CscView {
        self.csc.get_or_init(|| {
            let mut col_ptr = vec![0usize; self.ncols + 1];
            for &j in &self.col_idx {
                col_ptr[j + 1] += 1;
            }
            for j in 0..self.ncols {
                col_ptr[j + 1] += col_ptr[j];
            }
            let mut next = col_ptr.clone();
            let mut row_idx = vec![0usize; self.nnz()];
            let mut values = vec![0.0; self.nnz()];
            for i in 0..self.nrows {
                for (j, v) in self.row_entries(i) {
                    let slot = next[j];
                    row_idx[slot] = i;
                    values[slot] = v;
                    next[j] += 1;
                }
            }
            CscView {
                col_ptr,
                row_idx,
                values,
            }
        })
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.ncols, "CSR matvec dimension");
        DVector::from_fn(self.nrows, |i, _| {
            self.row_entries(i).map(|(j, v)| v * x[j]).sum()
        })
    }

    pub fn tr_mul_vec(&self, y: &DVector<f64>) -> DVector<f64> {
        assert_eq!(y.len(), self.nrows, "CSR adjoint matvec dimension");
        let csc = self.csc();
        DVector::from_fn(self.ncols, |j, _| {
            let range = csc.col_ptr[j]..csc.col_ptr[j + 1];
            csc.row_idx[range.clone()]
                .iter()
                .zip(&csc.values[range])
                .map(|(&i, &v)| v * y[i])
                .sum()
        })
    }

    pub fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.ncols, "CSR block product dimension");
        let r = x.ncols();
        let mut out = DMatrix::zeros(self.nrows, r);
        for i in 0..self.nrows {
            for (j, v) in self.row_entries(i) {
                for c in 0..r {
                    out[(i, c)] += v * x[(j, c)];
                }
            }
        }
        out
    }

    pub fn tr_mul_dense(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(y.nrows(), self.nrows, "CSR adjoint block product dimension");
        let csc = self.csc();
        let r = y.ncols();
        let mut out = DMatrix::zeros(self.ncols, r);
        for j in 0..self.ncols {
            for slot in csc.col_ptr[j]..csc.col_ptr[j + 1] {
                let (i, v) = (csc.row_idx[slot], csc.values[slot]);
                for c in 0..r {
                    out[(j, c)] += v * y[(i, c)];
                }
            }
        }
        out
    }

    pub fn column(&self, j: usize) -> DVector<f64> {
        let csc = self.csc();
        let mut out = DVector::zeros(self.nrows);
        for slot in csc.col_ptr[j]..csc.col_ptr[j + 1] {
            out[csc.row_idx[slot]] += csc.values[slot];
        }
        out
    }

    pub fn row(&self, i: usize) -> DVector<f64> {
        let mut out = DVector::zeros(self.ncols);
        for (j, v) in self.row_entries(i) {
            out[j] += v;
        }
        out
    }

    pub fn transpose(&self) -> CsrMatrix {
        let csc = self.csc();
        CsrMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr: csc.col_ptr.clone(),
            col_idx: csc.row_idx.clone(),
            values: csc.values.clone(),
            csc: OnceLock::new(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            out[(i, j)] += v;
        }
        out
    }

    /// Same pattern with every stored value mapped through `f(row, value)`.
    pub(crate) fn map_values(&self, mut f: impl FnMut(usize, f64) -> f64) -> CsrMatrix {
        let mut values = self.values.clone();
        for i in 0..self.nrows {
            for slot in self.row_ptr[i]..self.row_ptr[i + 1] {
                values[slot] = f(i, values[slot]);
            }
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values,
            csc: OnceLock::new(),
        }
    }
}
