use nalgebra::DMatrix;

use crate::error::{CurError, Result};

/// Row indices from a column-pivoted Householder QR of `uᵀ`, in pivot order.
///
/// Pivoting takes the remaining column of largest 2-norm; ties go to the
/// column with the smallest original index.
pub fn qdeim(u: &DMatrix<f64>) -> Result<Vec<usize>> {
    let (m, k) = u.shape();
    if k > m {
        return Err(CurError::InvalidArgument(format!(
            "QDEIM needs k <= m, got {k} columns for {m} rows"
        )));
    }
    let mut a = u.transpose(); // k × m
    let mut perm: Vec<usize> = (0..m).collect();
    let scale = u.amax();
    for step in 0..k {
        let mut best = step;
        let mut best_norm = -1.0;
        for c in step..m {
            let norm = a.view((step, c), (k - step, 1)).norm_squared();
            if norm > best_norm || (norm == best_norm && perm[c] < perm[best]) {
                best = c;
                best_norm = norm;
            }
        }
        if best_norm.sqrt() <= m as f64 * f64::EPSILON * scale {
            return Err(CurError::SingularInterpolation { step: step + 1 });
        }
        a.swap_columns(step, best);
        perm.swap(step, best);

        // Householder reflector zeroing a[step+1.., step].
        let mut v = a.view((step, step), (k - step, 1)).into_owned();
        let alpha = -v[0].signum() * v.norm();
        let alpha = if alpha == 0.0 { -v.norm() } else { alpha };
        v[0] -= alpha;
        let vnorm2 = v.norm_squared();
        if vnorm2 > 0.0 {
            for c in step..m {
                let d = v.dot(&a.view((step, c), (k - step, 1))) * 2.0 / vnorm2;
                let mut col = a.view_mut((step, c), (k - step, 1));
                col -= &v * d;
            }
        }
    }
    perm.truncate(k);
    Ok(perm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::select::deim;

    /// Independent route: modified Gram–Schmidt with largest-residual-norm
    /// pivoting on the columns of `uᵀ`.
    fn mgs_pivot_oracle(u: &DMatrix<f64>) -> Vec<usize> {
        let (m, k) = u.shape();
        let mut cols: Vec<_> = (0..m).map(|i| u.row(i).transpose()).collect();
        let mut free: Vec<usize> = (0..m).collect();
        let mut out = Vec::new();
        for _ in 0..k {
            let (pos, _) = free
                .iter()
                .enumerate()
                .fold((0, -1.0), |acc, (p, &c)| {
                    let n = cols[c].norm();
                    if n > acc.1 { (p, n) } else { acc }
                });
            let c = free.remove(pos);
            let q = &cols[c] / cols[c].norm();
            for &o in &free {
                let d = q.dot(&cols[o]);
                cols[o] -= &q * d;
            }
            out.push(c);
        }
        out
    }

    #[test]
    fn identity_columns() {
        let u = DMatrix::<f64>::identity(3, 2);
        assert_eq!(qdeim(&u).unwrap(), vec![0, 1]);
    }

    #[test]
    fn single_column_agrees_with_deim() {
        let u = DMatrix::from_column_slice(5, 1, &[0.1, -0.7, 0.3, 0.5, -0.2]);
        assert_eq!(qdeim(&u).unwrap(), deim(&u, None).unwrap());
    }

    #[test]
    fn matches_gram_schmidt_pivot_sequence() {
        let q = rng::gaussian_matrix(&mut rng::seeded(104), 10, 4).qr().q();
        assert_eq!(qdeim(&q).unwrap(), mgs_pivot_oracle(&q));
        for seed in 0..20 {
            let q = rng::gaussian_matrix(&mut rng::seeded(seed), 25, 6).qr().q();
            assert_eq!(qdeim(&q).unwrap(), mgs_pivot_oracle(&q), "seed {seed}");
        }
    }

    #[test]
    fn rank_deficient_input() {
        let u = DMatrix::from_column_slice(3, 2, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        assert!(matches!(qdeim(&u), Err(CurError::SingularInterpolation { step: 2 })));
    }
}
