use std::cell::Cell;

use nalgebra::{DMatrix, DVector};

/// Matrix-free access to a linear map `E: R^n -> R^m`.
///
/// Implementations must be deterministic: applying the operator twice to the
/// same vector yields bitwise-identical output. The block and
/// column/row helpers have default implementations in terms of the two
/// matvecs; concrete matrices override them with direct access.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;

    /// `x ↦ E x`, with `x.len() == ncols()`.
    fn apply(&self, x: &DVector<f64>) -> DVector<f64>;

    /// `y ↦ Eᵀ y`, with `y.len() == nrows()`.
    fn apply_adjoint(&self, y: &DVector<f64>) -> DVector<f64>;

    /// `E X` for an `n × r` block.
    fn apply_block(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let cols: Vec<_> = x
            .column_iter()
            .map(|c| self.apply(&c.into_owned()))
            .collect();
        stack_columns(self.nrows(), &cols)
    }

    /// `Eᵀ Y` for an `m × r` block.
    fn apply_adjoint_block(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        let cols: Vec<_> = y
            .column_iter()
            .map(|c| self.apply_adjoint(&c.into_owned()))
            .collect();
        stack_columns(self.ncols(), &cols)
    }

    /// Column `j` of `E`.
    fn column(&self, j: usize) -> DVector<f64> {
        let mut e = DVector::zeros(self.ncols());
        e[j] = 1.0;
        self.apply(&e)
    }

    /// Row `i` of `E`, as a vector of length `ncols()`.
    fn row(&self, i: usize) -> DVector<f64> {
        let mut e = DVector::zeros(self.nrows());
        e[i] = 1.0;
        self.apply_adjoint(&e)
    }

    /// The `m × k` block of columns `p`.
    fn columns(&self, p: &[usize]) -> DMatrix<f64> {
        let cols: Vec<_> = p.iter().map(|&j| self.column(j)).collect();
        stack_columns(self.nrows(), &cols)
    }

    /// The `k × n` block of rows `s`.
    fn rows(&self, s: &[usize]) -> DMatrix<f64> {
        let rows: Vec<_> = s.iter().map(|&i| self.row(i)).collect();
        stack_columns(self.ncols(), &rows).transpose()
    }
}

pub(crate) fn stack_columns(len: usize, cols: &[DVector<f64>]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(len, cols.len());
    for (j, c) in cols.iter().enumerate() {
        out.set_column(j, c);
    }
    out
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn nrows(&self) -> usize {
        (**self).nrows()
    }
    fn ncols(&self) -> usize {
        (**self).ncols()
    }
    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        (**self).apply(x)
    }
    fn apply_adjoint(&self, y: &DVector<f64>) -> DVector<f64> {
        (**self).apply_adjoint(y)
    }
    fn apply_block(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        (**self).apply_block(x)
    }
    fn apply_adjoint_block(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        (**self).apply_adjoint_block(y)
    }
    fn column(&self, j: usize) -> DVector<f64> {
        (**self).column(j)
    }
    fn row(&self, i: usize) -> DVector<f64> {
        (**self).row(i)
    }
    fn columns(&self, p: &[usize]) -> DMatrix<f64> {
        (**self).columns(p)
    }
    fn rows(&self, s: &[usize]) -> DMatrix<f64> {
        (**self).rows(s)
    }
}

impl LinearOperator for DMatrix<f64> {
    fn nrows(&self) -> usize {
        self.nrows()
    }
    fn ncols(&self) -> usize {
        self.ncols()
    }
    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self * x
    }
    fn apply_adjoint(&self, y: &DVector<f64>) -> DVector<f64> {
        self.tr_mul(y)
    }
    fn apply_block(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self * x
    }
    fn apply_adjoint_block(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        self.tr_mul(y)
    }
    fn column(&self, j: usize) -> DVector<f64> {
        DMatrix::column(self, j).into_owned()
    }
    fn row(&self, i: usize) -> DVector<f64> {
        DMatrix::row(self, i).transpose()
    }
    fn columns(&self, p: &[usize]) -> DMatrix<f64> {
        self.select_columns(p)
    }
    fn rows(&self, s: &[usize]) -> DMatrix<f64> {
        self.select_rows(s)
    }
}

/// The adjoint `Eᵀ` of a borrowed operator.
pub struct Transposed<'a, O: ?Sized>(pub &'a O);

impl<O: LinearOperator + ?Sized> LinearOperator for Transposed<'_, O> {
    fn nrows(&self) -> usize {
        self.0.ncols()
    }
    fn ncols(&self) -> usize {
        self.0.nrows()
    }
    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self.0.apply_adjoint(x)
    }
    fn apply_adjoint(&self, y: &DVector<f64>) -> DVector<f64> {
        self.0.apply(y)
    }
    fn apply_block(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.0.apply_adjoint_block(x)
    }
    fn apply_adjoint_block(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        self.0.apply_block(y)
    }
    fn column(&self, j: usize) -> DVector<f64> {
        self.0.row(j)
    }
    fn row(&self, i: usize) -> DVector<f64> {
        self.0.column(i)
    }
}

/// Wraps an operator and counts forward and adjoint applications.
/// Block applications count one per column.
pub struct CountingOperator<'a, O: ?Sized> {
    inner: &'a O,
    count: Cell<usize>,
}

impl<'a, O: LinearOperator + ?Sized> CountingOperator<'a, O> {
    pub fn new(inner: &'a O) -> Self {
        Self {
            inner,
            count: Cell::new(0),
        }
    }

    pub fn count(&self) -> usize {
        self.count.get()
    }

    fn bump(&self, by: usize) {
        self.count.set(self.count.get() + by);
    }
}

impl<O: LinearOperator + ?Sized> LinearOperator for CountingOperator<'_, O> {
    fn nrows(&self) -> usize {
        self.inner.nrows()
    }
    fn ncols(&self) -> usize {
        self.inner.ncols()
    }
    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self.bump(1);
        self.inner.apply(x)
    }
    fn apply_adjoint(&self, y: &DVector<f64>) -> DVector<f64> {
        self.bump(1);
        self.inner.apply_adjoint(y)
    }
    fn apply_block(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.bump(x.ncols());
        self.inner.apply_block(x)
    }
    fn apply_adjoint_block(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        self.bump(y.ncols());
        self.inner.apply_adjoint_block(y)
    }
}

/// Largest adjoint-consistency defect `|⟨Ex, y⟩ − ⟨x, Eᵀy⟩| / (‖x‖‖y‖)`
/// over `trials` random vector pairs.
pub fn adjoint_defect<O: LinearOperator + ?Sized>(op: &O, trials: usize, seed: u64) -> f64 {
    let mut rng = crate::rng::seeded(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let x = crate::rng::gaussian_vector(&mut rng, op.ncols());
        let y = crate::rng::gaussian_vector(&mut rng, op.nrows());
        let lhs = op.apply(&x).dot(&y);
        let rhs = x.dot(&op.apply_adjoint(&y));
        let scale = x.norm() * y.norm();
        if scale > 0.0 {
            worst = worst.max((lhs - rhs).abs() / scale);
        }
    }
    worst
}
