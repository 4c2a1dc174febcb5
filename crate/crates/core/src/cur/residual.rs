use nalgebra::{DMatrix, DVector};

use crate::error::{CurError, Result};
use crate::linalg::orthonormality_defect;
use crate::matrix::LinearOperator;

/// The one-sided residual `E = (I − QQᵀ)A`, applied matrix-free.
pub struct ResidualOperator<'a, O: ?Sized> {
    a: &'a O,
    q: DMatrix<f64>,
}

impl<'a, O: LinearOperator + ?Sized> ResidualOperator<'a, O> {
    /// `q` must have orthonormal columns (to `1e-10`) and `a.nrows()` rows.
    pub fn new(a: &'a O, q: DMatrix<f64>) -> Result<Self> {
        if q.nrows() != a.nrows() {
            return Err(CurError::DimensionMismatch {
                context: "residual operator basis",
                expected: a.nrows(),
                found: q.nrows(),
            });
        }
        let defect = orthonormality_defect(&q);
        if defect > 1e-10 {
            return Err(CurError::NotOrthonormal { deviation: defect });
        }
        Ok(Self { a, q })
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.q
    }

    fn project_out(&self, y: &mut DVector<f64>) {
        if self.q.ncols() > 0 {
            let h = self.q.tr_mul(y);
            *y -= &self.q * h;
        }
    }

    fn project_out_block(&self, y: &mut DMatrix<f64>) {
        if self.q.ncols() > 0 {
            let h = self.q.tr_mul(y);
            *y -= &self.q * h;
        }
    }
}

impl<O: LinearOperator + ?Sized> LinearOperator for ResidualOperator<'_, O> {
    fn nrows(&self) -> usize {
        self.a.nrows()
    }
    fn ncols(&self) -> usize {
        self.a.ncols()
    }
    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = self.a.apply(x);
        self.project_out(&mut y);
        y
    }
    fn apply_adjoint(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut z = y.clone();
        self.project_out(&mut z);
        self.a.apply_adjoint(&z)
    }
    fn apply_block(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut y = self.a.apply_block(x);
        self.project_out_block(&mut y);
        y
    }
    fn apply_adjoint_block(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        let mut z = y.clone();
        self.project_out_block(&mut z);
        self.a.apply_adjoint_block(&z)
    }
}

/// The two-sided residual `E = A − C M R`, applied matrix-free.
pub struct CurResidualOperator<'a, O: ?Sized> {
    a: &'a O,
    c: &'a DMatrix<f64>,
    m: &'a DMatrix<f64>,
    r: &'a DMatrix<f64>,
}

impl<'a, O: LinearOperator + ?Sized> CurResidualOperator<'a, O> {
    pub fn new(
        a: &'a O,
        c: &'a DMatrix<f64>,
        m: &'a DMatrix<f64>,
        r: &'a DMatrix<f64>,
    ) -> Result<Self> {
        let ok = c.nrows() == a.nrows()
            && r.ncols() == a.ncols()
            && m.nrows() == c.ncols()
            && m.ncols() == r.nrows();
        if !ok {
            return Err(CurError::InvalidArgument(format!(
                "CUR blocks {}x{}, {}x{}, {}x{} do not fit a {}x{} matrix",
                c.nrows(),
                c.ncols(),
                m.nrows(),
                m.ncols(),
                r.nrows(),
                r.ncols(),
                a.nrows(),
                a.ncols()
            )));
        }
        Ok(Self { a, c, m, r })
    }
}

impl<O: LinearOperator + ?Sized> LinearOperator for CurResidualOperator<'_, O> {
    fn nrows(&self) -> usize {
        self.a.nrows()
    }
    fn ncols(&self) -> usize {
        self.a.ncols()
    }
    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self.a.apply(x) - self.c * (self.m * (self.r * x))
    }
    fn apply_adjoint(&self, y: &DVector<f64>) -> DVector<f64> {
        self.a.apply_adjoint(y) - self.r.tr_mul(&self.m.tr_mul(&self.c.tr_mul(y)))
    }
    fn apply_block(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.a.apply_block(x) - self.c * (self.m * (self.r * x))
    }
    fn apply_adjoint_block(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        self.a.apply_adjoint_block(y) - self.r.tr_mul(&self.m.tr_mul(&self.c.tr_mul(y)))
    }
}
