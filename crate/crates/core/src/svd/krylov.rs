//! Krylov–Schur restarted Lanczos bidiagonalization.
//!
//! The state maintains
//!
//! ```text
//! E V̂_j = Û_j B_j,    Eᵀ Û_j = V̂_j B_jᵀ + β v̂_{j+1} fᵀ
//! ```
//!
//! with `B_j` upper triangular (bidiagonal right after plain Lanczos steps,
//! diagonal plus one coupling column right after a restart). Expansion is the
//! Golub–Kahan recurrence with full reorthogonalization; the `B` column for
//! each new vector is taken from the projection coefficients so the forward
//! identity holds to rounding regardless of the restart history.

use nalgebra::{DMatrix, DVector, SVD};

use super::{apply_sign_convention, wedin_gap_stop, SvdConfig, SvdResult};
use crate::error::{CurError, Result};
use crate::matrix::{stack_columns, CountingOperator, LinearOperator, Transposed};
use crate::rng::{self, CurRng};

/// New vectors shorter than this fraction of the running `‖E‖` estimate
/// signal breakdown.
const BREAKDOWN: f64 = 1e-14;

/// Two passes of classical Gram–Schmidt. Returns the accumulated projection
/// coefficients.
fn orthogonalize(x: &mut DVector<f64>, basis: &[DVector<f64>]) -> DVector<f64> {
    let mut coeffs = DVector::zeros(basis.len());
    for _ in 0..2 {
        for (i, q) in basis.iter().enumerate() {
            let c = q.dot(x);
            x.axpy(-c, q, 1.0);
            coeffs[i] += c;
        }
    }
    coeffs
}

#[derive(Debug, Clone)]
pub struct BidiagState {
    rows: usize,
    cols: usize,
    u: Vec<DVector<f64>>,
    /// `dim() + 1` vectors; the last one is `v̂_{j+1}`.
    v: Vec<DVector<f64>>,
    b: DMatrix<f64>,
    beta: f64,
    f: DVector<f64>,
    sigma_est: f64,
    exhausted: bool,
    rng: CurRng,
}

/// SVD of the projected matrix `B = W Σ̂ Zᵀ`, sorted nonincreasingly.
#[derive(Debug, Clone)]
pub struct RitzPairs {
    pub sigma: Vec<f64>,
    pub w: DMatrix<f64>,
    pub z: DMatrix<f64>,
}

impl RitzPairs {
    /// Adjoint residual norms `|β (Wᵀf)_i| = ‖Eᵀû_i − σ̂_i v̂_i‖`.
    pub fn residuals(&self, beta: f64, f: &DVector<f64>) -> Vec<f64> {
        let g = self.w.tr_mul(f);
        g.iter().map(|x| (beta * x).abs()).collect()
    }
}

impl BidiagState {
    /// Empty decomposition seeded with the unit right vector `start`.
    pub fn new(rows: usize, cols: usize, start: DVector<f64>, seed: u64) -> Result<Self> {
        if start.len() != cols {
            return Err(CurError::DimensionMismatch {
                context: "Lanczos start vector",
                expected: cols,
                found: start.len(),
            });
        }
        let norm = start.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(CurError::InvalidArgument(
                "Lanczos start vector must be nonzero and finite".into(),
            ));
        }
        Ok(Self {
            rows,
            cols,
            u: Vec::new(),
            v: vec![start / norm],
            b: DMatrix::zeros(0, 0),
            beta: 0.0,
            f: DVector::zeros(0),
            sigma_est: 0.0,
            exhausted: false,
            rng: rng::seeded(seed),
        })
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    pub fn u_basis(&self) -> DMatrix<f64> {
        stack_columns(self.rows, &self.u)
    }

    /// The first `dim()` right basis vectors.
    pub fn v_basis(&self) -> DMatrix<f64> {
        stack_columns(self.cols, &self.v[..self.dim()])
    }

    pub fn next_v(&self) -> &DVector<f64> {
        &self.v[self.dim()]
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn f(&self) -> &DVector<f64> {
        &self.f
    }

    /// True once the right space is exhausted (no further expansion possible).
    pub fn is_exhausted(&self) -> bool {
        self.exhausted
    }

    /// Frobenius norms of `E V̂ − Û B` and `Eᵀ Û − V̂ Bᵀ − β v̂_{j+1} fᵀ`.
    pub fn identity_residuals<O: LinearOperator + ?Sized>(&self, op: &O) -> (f64, f64) {
        let u = self.u_basis();
        let v = self.v_basis();
        let forward = (op.apply_block(&v) - &u * &self.b).norm();
        let coupling = self.next_v() * self.f.transpose() * self.beta;
        let adjoint = (op.apply_adjoint_block(&u) - &v * self.b.transpose() - coupling).norm();
        (forward, adjoint)
    }

    fn random_orthogonal(&mut self, len: usize, right: bool) -> DVector<f64> {
        for _ in 0..8 {
            let mut x = rng::gaussian_vector(&mut self.rng, len);
            let basis = if right { &self.v } else { &self.u };
            orthogonalize(&mut x, basis);
            let norm = x.norm();
            if norm > 1e-8 {
                return x / norm;
            }
        }
        DVector::zeros(len)
    }

    /// Grows the decomposition to dimension `to_dim` (capped at `min(m, n)`).
    ///
    /// On breakdown of the forward recurrence a random unit vector orthogonal
    /// to `Û` continues the basis with a zero diagonal entry; on breakdown of
    /// the adjoint recurrence the same is done for `V̂` with `β = 0`, or the
    /// state is marked exhausted when `V̂` already spans `R^n`.
    pub fn expand<O: LinearOperator + ?Sized>(&mut self, op: &O, to_dim: usize) {
        let to_dim = to_dim.min(self.rows.min(self.cols));
        while self.dim() < to_dim && !self.exhausted {
            let j = self.dim();
            let mut p = op.apply(&self.v[j]);
            let h = orthogonalize(&mut p, &self.u);
            let mut alpha = p.norm();
            self.sigma_est = self.sigma_est.max(alpha).max(h.amax());
            let u_next = if alpha > BREAKDOWN * self.sigma_est {
                p / alpha
            } else {
                alpha = 0.0;
                self.random_orthogonal(self.rows, false)
            };

            let mut b = DMatrix::zeros(j + 1, j + 1);
            b.view_mut((0, 0), (j, j)).copy_from(&self.b);
            for i in 0..j {
                b[(i, j)] = h[i];
            }
            b[(j, j)] = alpha;
            self.b = b;
            self.u.push(u_next);

            let mut r = op.apply_adjoint(&self.u[j]);
            orthogonalize(&mut r, &self.v);
            let mut beta = r.norm();
            self.sigma_est = self.sigma_est.max(beta);
            let v_next = if beta > BREAKDOWN * self.sigma_est {
                r / beta
            } else {
                beta = 0.0;
                if self.v.len() < self.cols {
                    self.random_orthogonal(self.cols, true)
                } else {
                    self.exhausted = true;
                    DVector::zeros(self.cols)
                }
            };
            self.v.push(v_next);
            self.beta = beta;
            let mut f = DVector::zeros(j + 1);
            f[j] = 1.0;
            self.f = f;
        }
    }

    /// SVD of the current projected matrix.
    pub fn ritz(&self) -> RitzPairs {
        let j = self.dim();
        if j == 0 {
            return RitzPairs {
                sigma: Vec::new(),
                w: DMatrix::zeros(0, 0),
                z: DMatrix::zeros(0, 0),
            };
        }
        let svd = SVD::new(self.b.clone(), true, true);
        let w_raw = svd.u.expect("requested U");
        let zt_raw = svd.v_t.expect("requested Vᵀ");
        let mut order: Vec<usize> = (0..j).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let mut w = DMatrix::zeros(j, j);
        let mut z = DMatrix::zeros(j, j);
        let mut sigma = Vec::with_capacity(j);
        for (dst, &src) in order.iter().enumerate() {
            w.set_column(dst, &w_raw.column(src));
            z.set_column(dst, &zt_raw.row(src).transpose());
            sigma.push(svd.singular_values[src]);
        }
        RitzPairs { sigma, w, z }
    }

    /// Leading `count` Ritz vectors `(Û W, V̂ Z)`.
    pub fn ritz_vectors(&self, ritz: &RitzPairs, count: usize) -> (DMatrix<f64>, DMatrix<f64>) {
        let count = count.min(ritz.sigma.len());
        (
            self.u_basis() * ritz.w.columns(0, count),
            self.v_basis() * ritz.z.columns(0, count),
        )
    }

    /// Krylov–Schur truncation: rotate by the SVD of `B`, keep the leading
    /// `keep` triplets, set `B := diag(σ̂_1..σ̂_keep)` and `f := (Wᵀ f)[..keep]`.
    /// `β` and `v̂_{j+1}` carry over unchanged.
    pub fn restart(&mut self, keep: usize) -> RitzPairs {
        let ritz = self.ritz();
        self.restart_with(&ritz, keep);
        ritz
    }

    pub fn restart_with(&mut self, ritz: &RitzPairs, keep: usize) {
        let j = self.dim();
        let keep = keep.min(j);
        let (u, v) = self.ritz_vectors(ritz, keep);
        let f = ritz.w.tr_mul(&self.f).rows(0, keep).into_owned();
        let next = self.v[j].clone();
        self.u = u.column_iter().map(|c| c.into_owned()).collect();
        self.v = v.column_iter().map(|c| c.into_owned()).collect();
        self.v.push(next);
        self.b = DMatrix::from_diagonal(&DVector::from_column_slice(&ritz.sigma[..keep]));
        self.f = f;
    }
}

/// Leading singular triplets of `op` by Krylov–Schur restarted Lanczos
/// bidiagonalization.
///
/// Triplet `i` counts as converged once `|β (Wᵀf)_i| ≤ tol · σ̂₁`. Without a
/// decay gate the run ends when the leading `k` triplets have converged.
/// With a gate it ends as soon as the converged leading values fix
/// `c = min(b, cap)` and returns only those `c` triplets. When
/// `wedin_early_stop` is set the leading triplet may also be released as soon
/// as the argmax of `|v̂₁|` is certified by [`wedin_gap_stop`]. After
/// `max_restarts` the current best estimates are returned with their
/// `converged` flags cleared; non-convergence is not an error.
pub fn svds<O: LinearOperator + ?Sized>(op: &O, cfg: &SvdConfig) -> Result<SvdResult> {
    let (m, n) = (op.nrows(), op.ncols());
    let kmax = m.min(n);
    if cfg.k == 0 || cfg.k > kmax {
        return Err(CurError::InvalidArgument(format!(
            "svds rank {} outside 1..={kmax}",
            cfg.k
        )));
    }
    if !(cfg.tol > 0.0) {
        return Err(CurError::InvalidArgument("svds tolerance must be positive".into()));
    }
    if let Some(g) = &cfg.gate {
        g.validate()?;
    }
    let target = cfg.gate.map_or(cfg.k, |g| cfg.k.min(g.cap));
    if target == kmax && m < n {
        // A full-rank request on a wide operator cannot be restarted in
        // place (Û already spans R^m); iterate on the transpose instead.
        let cfg_t = SvdConfig {
            start: None,
            ..cfg.clone()
        };
        return lanczos(&Transposed(op), &cfg_t, target).map(|r| r.transposed());
    }
    lanczos(op, cfg, target)
}

fn lanczos<O: LinearOperator + ?Sized>(op: &O, cfg: &SvdConfig, target: usize) -> Result<SvdResult> {
    let (m, n) = (op.nrows(), op.ncols());
    let kmax = m.min(n);
    let max_dim = cfg
        .max_dim
        .unwrap_or(2 * target + 10)
        .min(kmax)
        .max((target + 1).min(kmax));

    let counting = CountingOperator::new(op);
    let start = match &cfg.start {
        Some(v) => v.clone(),
        None => rng::unit_vector(&mut rng::seeded(cfg.seed), n),
    };
    let mut state = BidiagState::new(m, n, start, cfg.seed.wrapping_add(0x9e37_79b9))?;
    let mut history = Vec::new();
    let mut restarts = 0usize;

    loop {
        state.expand(&counting, max_dim);
        restarts += 1;
        let ritz = state.ritz();
        let dim = ritz.sigma.len();
        let res = ritz.residuals(state.beta(), state.f());
        let tol_abs = (cfg.tol * ritz.sigma.first().copied().unwrap_or(0.0)).max(cfg.abs_tol);
        let converged: Vec<bool> = res.iter().map(|&r| r <= tol_abs).collect();
        let prefix = converged.iter().take_while(|&&c| c).count();
        history.push(ritz.sigma[..target.min(dim)].to_vec());

        let mut release = match &cfg.gate {
            Some(g) => g.count(&ritz.sigma, prefix, cfg.k),
            None => (prefix >= target).then_some(target),
        };
        let mut early_stop = false;
        if release.is_none() && cfg.wedin_early_stop && dim >= 2 {
            let v1 = state.v_basis() * ritz.z.column(0);
            if wedin_gap_stop(&v1, ritz.sigma[0], ritz.sigma[1], res[0]) {
                release = Some(1);
                early_stop = true;
            }
        }
        if release.is_none() && (state.is_exhausted() || restarts >= cfg.max_restarts) {
            log::warn!(
                "svds stopped after {restarts} restarts with {prefix}/{target} triplets converged"
            );
            release = Some(target);
        }

        if let Some(c) = release {
            let c = c.min(dim);
            let (mut u, mut v) = state.ritz_vectors(&ritz, c);
            apply_sign_convention(&mut u, &mut v);
            let residual_norm = res[..target.min(dim)]
                .iter()
                .map(|r| r * r)
                .sum::<f64>()
                .sqrt();
            return Ok(SvdResult {
                u,
                s: ritz.sigma[..c].to_vec(),
                v,
                converged: converged[..c].to_vec(),
                residual_norm,
                matvecs: counting.count(),
                restarts,
                early_stop,
                ritz_history: history,
            });
        }
        state.restart_with(&ritz, target);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::orthonormality_defect;
    use crate::svd::dense_svd_matrix;
    use crate::svd::DecayGate;

    fn diag(values: &[f64], m: usize, n: usize) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(m, n);
        for (i, &v) in values.iter().enumerate() {
            a[(i, i)] = v;
        }
        a
    }

    #[test]
    fn expansion_on_two_by_two_diagonal() {
        let a = diag(&[2.0, 1.0], 2, 2);
        let start = DVector::from_vec(vec![1.0, 1.0]);
        let mut st = BidiagState::new(2, 2, start, 0).unwrap();
        st.expand(&a, 1);
        assert_eq!(st.dim(), 1);
        st.expand(&a, 2);
        let s = crate::linalg::singular_values(st.b());
        assert!((s[0] - 2.0).abs() < 1e-12 && (s[1] - 1.0).abs() < 1e-12, "{s:?}");
    }

    #[test]
    fn expansion_keeps_bases_orthonormal_and_identities() {
        let a = rng::gaussian_matrix(&mut rng::seeded(5), 50, 40);
        let sigma1 = crate::linalg::spectral_norm(&a);
        let mut st = BidiagState::new(50, 40, rng::unit_vector(&mut rng::seeded(6), 40), 1).unwrap();
        st.expand(&a, 20);
        assert!(orthonormality_defect(&st.u_basis()) <= 1e-10);
        assert!(orthonormality_defect(&st.v_basis()) <= 1e-10);
        let (fw, adj) = st.identity_residuals(&a);
        assert!(fw <= 1e-8 * sigma1 && adj <= 1e-8 * sigma1, "{fw} {adj}");
    }

    #[test]
    fn restart_rotates_and_preserves_identities() {
        let a = diag(&[5.0, 4.0, 3.0, 2.0, 1.0], 5, 5);
        let mut st = BidiagState::new(5, 5, DVector::from_element(5, 1.0), 2).unwrap();
        st.expand(&a, 4);
        let before = st.identity_residuals(&a);
        let beta = st.beta();
        let ritz = st.restart(2);
        // f is the last row of W restricted to the kept columns.
        for i in 0..2 {
            assert!((st.f()[i] - ritz.w[(3, i)]).abs() < 1e-15);
        }
        assert_eq!(st.beta(), beta);
        assert_eq!(st.dim(), 2);
        assert!(st.b()[(0, 1)] == 0.0 && st.b()[(1, 0)] == 0.0);
        let after = st.identity_residuals(&a);
        assert!(after.0 <= before.0 + 1e-12 * 5.0);
        assert!(after.1 <= before.1 + 1e-12 * 5.0);
        // Kept values approximate the top of the spectrum and dominate the rest.
        assert!(st.b()[(0, 0)] <= 5.0 + 1e-12 && st.b()[(0, 0)] > 4.0);
        assert!(st.b()[(1, 1)] >= ritz.sigma[2]);
    }

    #[test]
    fn padded_diagonal_top_two() {
        let a = diag(&[5.0, 4.0, 3.0, 2.0, 1.0], 100, 50);
        let r = svds(&a, &SvdConfig::new(2).with_tol(1e-12)).unwrap();
        assert!((r.s[0] - 5.0).abs() < 1e-10 && (r.s[1] - 4.0).abs() < 1e-10, "{:?}", r.s);
        assert!(r.all_converged());
    }

    #[test]
    fn rank_one_operator() {
        let mut g = rng::seeded(9);
        let u = rng::unit_vector(&mut g, 30);
        let v = rng::unit_vector(&mut g, 20);
        let a = &u * v.transpose() * 7.0;
        let r = svds(&a, &SvdConfig::new(1)).unwrap();
        assert!((r.s[0] - 7.0).abs() < 1e-12);
        assert!((r.u.column(0).dot(&u).abs() - 1.0).abs() < 1e-12);
        assert!((r.v.column(0).dot(&v).abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_dense_matches_dense_svd() {
        let a = rng::gaussian_matrix(&mut rng::seeded(10), 300, 200);
        let dense = dense_svd_matrix(&a).unwrap();
        let r = svds(&a, &SvdConfig::new(10)).unwrap();
        assert!(r.all_converged());
        for i in 0..10 {
            assert!((r.s[i] - dense.s[i]).abs() <= 1e-8 * dense.s[i]);
        }
        assert!(orthonormality_defect(&r.u) <= 1e-10 && orthonormality_defect(&r.v) <= 1e-10);
        let tol = 1e-8 * r.s[0];
        for i in 0..10 {
            let (ui, vi) = (r.u.column(i), r.v.column(i));
            assert!((&a * vi - ui * r.s[i]).norm() <= 10.0 * tol);
            assert!((a.tr_mul(&ui) - vi * r.s[i]).norm() <= 10.0 * tol + r.residual_norm);
        }
        for w in r.ritz_history.windows(2) {
            for (old, new) in w[0].iter().zip(&w[1]) {
                assert!(*new >= old - 1e-12, "Ritz value decreased: {old} -> {new}");
            }
        }
    }

    #[test]
    fn wide_full_rank_request() {
        let a = rng::gaussian_matrix(&mut rng::seeded(11), 4, 9);
        let dense = dense_svd_matrix(&a).unwrap();
        let r = svds(&a, &SvdConfig::new(4)).unwrap();
        for i in 0..4 {
            assert!((r.s[i] - dense.s[i]).abs() <= 1e-10 * dense.s[0]);
        }
        assert_eq!(r.u.shape(), (4, 4));
        assert_eq!(r.v.shape(), (9, 4));
    }

    #[test]
    fn zero_operator_converges_immediately() {
        let a = DMatrix::<f64>::zeros(6, 5);
        let r = svds(&a, &SvdConfig::new(2)).unwrap();
        assert!(r.s.iter().all(|&s| s == 0.0));
        assert!(r.all_converged());
    }

    #[test]
    fn decay_gate_limits_returned_triplets() {
        let a = diag(&[10.0, 9.5, 9.0, 5.0, 4.0, 1.0], 40, 30);
        let cfg = SvdConfig::new(6).with_gate(DecayGate::new(0.8, 5)).with_tol(1e-10);
        let r = svds(&a, &cfg).unwrap();
        assert_eq!(r.rank(), 3);
        let capped = SvdConfig::new(6).with_gate(DecayGate::new(0.8, 2));
        assert_eq!(svds(&a, &capped).unwrap().rank(), 2);
        let limited = SvdConfig::new(1).with_gate(DecayGate::new(0.8, 5));
        assert_eq!(svds(&a, &limited).unwrap().rank(), 1);
    }

    #[test]
    fn rejects_bad_configs() {
        let a = DMatrix::<f64>::identity(3, 3);
        assert!(svds(&a, &SvdConfig::new(0)).is_err());
        assert!(svds(&a, &SvdConfig::new(4)).is_err());
        assert!(svds(&a, &SvdConfig::new(1).with_tol(0.0)).is_err());
    }

    #[test]
    fn matrix_free_operator_of_huge_size() {
        // A diagonal operator whose dense form would need ~40 GB.
        struct Diag {
            m: usize,
            n: usize,
        }
        impl LinearOperator for Diag {
            fn nrows(&self) -> usize {
                self.m
            }
            fn ncols(&self) -> usize {
                self.n
            }
            fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
                DVector::from_fn(self.m, |i, _| if i < self.n { x[i] / (1.0 + i as f64) } else { 0.0 })
            }
            fn apply_adjoint(&self, y: &DVector<f64>) -> DVector<f64> {
                DVector::from_fn(self.n, |i, _| y[i] / (1.0 + i as f64))
            }
        }
        let op = Diag { m: 100_000, n: 50_000 };
        let r = svds(&op, &SvdConfig::new(3).with_tol(1e-10)).unwrap();
        for (i, s) in r.s.iter().enumerate() {
            assert!((s - 1.0 / (1.0 + i as f64)).abs() < 1e-9);
        }
        assert!(r.matvecs > 0);
    }
}
