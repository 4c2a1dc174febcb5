use nalgebra::{DMatrix, DVector};

use crate::error::{CurError, Result};
use crate::linalg::{argmax_abs, lu_solve};

/// Indices chosen by DEIM together with the obliquely deflated columns
/// `r_j` (column `j` of `residuals`) whose argmax picked each index.
#[derive(Debug, Clone)]
pub struct DeimOutcome {
    pub indices: Vec<usize>,
    pub residuals: DMatrix<f64>,
    /// Steps (0-based) that fell back to the raw column; see [`deim_with_fallback`].
    pub fallback_steps: Vec<usize>,
}

fn masked_copy(u: &DMatrix<f64>, masked_rows: Option<&[usize]>) -> Result<DMatrix<f64>> {
    let mut work = u.clone();
    if let Some(rows) = masked_rows {
        for &i in rows {
            if i >= work.nrows() {
                return Err(CurError::InvalidArgument(format!(
                    "masked row {i} outside {} rows",
                    work.nrows()
                )));
            }
            work.row_mut(i).fill(0.0);
        }
    }
    Ok(work)
}

/// One DEIM step: deflate column `j` of `work` in place against the first
/// `j` columns interpolated at `chosen`, returning `false` if the
/// interpolation system is singular.
fn deflate(work: &mut DMatrix<f64>, chosen: &[usize], j: usize) -> bool {
    if j == 0 {
        return true;
    }
    let sys = DMatrix::from_fn(j, j, |r, c| work[(chosen[r], c)]);
    let rhs = DVector::from_fn(j, |r, _| work[(chosen[r], j)]);
    let Some(coef) = lu_solve(&sys, &rhs) else {
        return false;
    };
    let correction = work.columns(0, j) * coef;
    let mut col = work.column_mut(j);
    col -= correction;
    true
}

fn pick(col: impl Iterator<Item = f64>, taken: &[bool]) -> Option<usize> {
    let (idx, val) = argmax_abs(col)?;
    (val > 0.0 && !taken[idx]).then_some(idx)
}

/// DEIM index selection on the columns of `u` (`m × k`, `k ≤ m`).
///
/// Rows listed in `masked_rows` are zeroed before selection so they can never
/// be chosen. Fails with [`CurError::SingularInterpolation`] when the
/// interpolation system at some step is singular, which requires rank
/// deficient or masked input.
pub fn deim(u: &DMatrix<f64>, masked_rows: Option<&[usize]>) -> Result<Vec<usize>> {
    deim_with_residuals(u, masked_rows).map(|o| o.indices)
}

pub fn deim_with_residuals(u: &DMatrix<f64>, masked_rows: Option<&[usize]>) -> Result<DeimOutcome> {
    let (m, k) = u.shape();
    if k > m {
        return Err(CurError::InvalidArgument(format!(
            "DEIM needs k <= m, got {k} columns for {m} rows"
        )));
    }
    let mut work = masked_copy(u, masked_rows)?;
    let mut chosen = Vec::with_capacity(k);
    let mut taken = vec![false; m];
    for j in 0..k {
        if !deflate(&mut work, &chosen, j) {
            return Err(CurError::SingularInterpolation { step: j + 1 });
        }
        let idx = pick(work.column(j).iter().copied(), &taken)
            .ok_or(CurError::SingularInterpolation { step: j + 1 })?;
        taken[idx] = true;
        chosen.push(idx);
    }
    Ok(DeimOutcome {
        indices: chosen,
        residuals: work,
        fallback_steps: Vec::new(),
    })
}

/// DEIM that never fails on singular interpolation systems: a step whose
/// system is singular (or whose deflated column vanishes) instead takes the
/// largest-magnitude entry of the raw masked column among rows not yet
/// chosen, and is reported in `fallback_steps`. If that column is zero on
/// every free row, the smallest free unmasked row is taken.
pub fn deim_with_fallback(u: &DMatrix<f64>, masked_rows: Option<&[usize]>) -> Result<DeimOutcome> {
    let (m, k) = u.shape();
    let masked = masked_rows.unwrap_or(&[]);
    if k + masked.len().min(m) > m {
        return Err(CurError::InvalidArgument(format!(
            "cannot choose {k} rows with {} of {m} masked",
            masked.len()
        )));
    }
    let raw = masked_copy(u, masked_rows)?;
    let mut work = raw.clone();
    let mut chosen = Vec::with_capacity(k);
    let mut taken = vec![false; m];
    let mut fallback_steps = Vec::new();
    for j in 0..k {
        let deflated = deflate(&mut work, &chosen, j);
        let idx = if deflated {
            pick(work.column(j).iter().copied(), &taken)
        } else {
            None
        };
        let idx = match idx {
            Some(i) => i,
            None => {
                fallback_steps.push(j);
                work.set_column(j, &raw.column(j));
                let raw_col = raw.column(j);
                let free = raw_col
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| if taken[i] { 0.0 } else { x });
                pick(free, &taken).unwrap_or_else(|| {
                    (0..m)
                        .find(|i| !taken[*i] && !masked.contains(i))
                        .expect("enough free rows checked above")
                })
            }
        };
        taken[idx] = true;
        chosen.push(idx);
    }
    Ok(DeimOutcome {
        indices: chosen,
        residuals: work,
        fallback_steps,
    })
}
