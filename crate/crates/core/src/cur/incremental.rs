use nalgebra::{DMatrix, DVector};

use crate::error::{CurError, Result};

/// `C = Q T` maintained one column at a time by Gram–Schmidt with one
/// reorthogonalization pass.
#[derive(Debug, Clone)]
pub struct IncrementalQr {
    q: DMatrix<f64>,
    t: DMatrix<f64>,
}

/// Relative norm below which an appended column counts as dependent.
const SPAN_TOL: f64 = 1e-12;

impl IncrementalQr {
    pub fn new(rows: usize) -> Self {
        Self {
            q: DMatrix::zeros(rows, 0),
            t: DMatrix::zeros(0, 0),
        }
    }

    pub fn rows(&self) -> usize {
        self.q.nrows()
    }

    pub fn len(&self) -> usize {
        self.q.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.q.ncols() == 0
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn t(&self) -> &DMatrix<f64> {
        &self.t
    }

    /// Appends one column; `label` names it in the error if it is rejected.
    pub fn append(&mut self, col: &DVector<f64>, label: usize) -> Result<()> {
        if col.len() != self.rows() {
            return Err(CurError::DimensionMismatch {
                context: "incremental QR column",
                expected: self.rows(),
                found: col.len(),
            });
        }
        let original = col.norm();
        let mut w = col.clone();
        let mut h = DVector::zeros(self.len());
        for _ in 0..2 {
            let d = self.q.tr_mul(&w);
            w -= &self.q * &d;
            h += d;
        }
        let rho = w.norm();
        if !(rho > SPAN_TOL * original) {
            return Err(CurError::ColumnInSpan { column: label });
        }
        let j = self.len();
        let q = std::mem::replace(&mut self.q, DMatrix::zeros(0, 0));
        self.q = q.resize_horizontally(j + 1, 0.0);
        self.q.set_column(j, &(w / rho));
        let t = std::mem::replace(&mut self.t, DMatrix::zeros(0, 0));
        self.t = t.resize(j + 1, j + 1, 0.0);
        self.t.view_mut((0, j), (j, 1)).copy_from(&h);
        self.t[(j, j)] = rho;
        Ok(())
    }

    /// Appends the columns of `cols`, labelled by `labels`.
    pub fn append_block(&mut self, cols: &DMatrix<f64>, labels: &[usize]) -> Result<()> {
        for (j, col) in cols.column_iter().enumerate() {
            self.append(&col.into_owned(), labels.get(j).copied().unwrap_or(j))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::orthonormality_defect;
    use crate::rng;

    #[test]
    fn unit_columns() {
        let mut qr = IncrementalQr::new(3);
        let e = DMatrix::<f64>::identity(3, 3);
        qr.append(&e.column(0).into_owned(), 0).unwrap();
        qr.append(&e.column(1).into_owned(), 1).unwrap();
        assert_eq!(qr.q(), &DMatrix::<f64>::identity(3, 2));
        assert_eq!(qr.t(), &DMatrix::<f64>::identity(2, 2));
    }

    #[test]
    fn first_append_normalizes() {
        let mut qr = IncrementalQr::new(2);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        qr.append(&DVector::from_vec(vec![h, h]), 7).unwrap();
        assert!((qr.q().column(0) - DVector::from_vec(vec![h, h])).amax() < 1e-15);
        assert!((qr.t()[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reconstructs_random_columns() {
        let c = rng::gaussian_matrix(&mut rng::seeded(20), 100, 20);
        let mut qr = IncrementalQr::new(100);
        let labels: Vec<usize> = (0..20).collect();
        qr.append_block(&c, &labels).unwrap();
        assert!((qr.q() * qr.t() - &c).amax() <= 1e-10 * c.norm());
        assert!(orthonormality_defect(qr.q()) <= 1e-10);
        for i in 0..20 {
            for j in 0..i {
                assert_eq!(qr.t()[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn dependent_column_rejected() {
        let mut qr = IncrementalQr::new(3);
        let a = DVector::from_vec(vec![1.0, 2.0, 0.0]);
        let b = DVector::from_vec(vec![0.0, 1.0, 1.0]);
        qr.append(&a, 0).unwrap();
        qr.append(&b, 1).unwrap();
        let dep = &a * 3.0 - &b;
        assert!(matches!(qr.append(&dep, 9), Err(CurError::ColumnInSpan { column: 9 })));
        assert_eq!(qr.len(), 2);
        assert!(matches!(
            qr.append(&DVector::zeros(3), 4),
            Err(CurError::ColumnInSpan { column: 4 })
        ));
    }
}
