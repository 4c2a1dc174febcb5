//! Seeded acceptance checks, shared by the integration tests and the
//! `verify` subcommand.
//!
//! Every check is deterministic. [`VerifyOptions::tolerance_scale`]
//! multiplies each numerical tolerance; a non-positive scale is a negative
//! control that must make the suite fail.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::adaptive::{
    cadp_cur, cadp_cx, dadp_cur, dadp_cx, dadp_cx_large, one_round_cur, AdaptiveOutcome, Backend,
    RoundTrace,
};
use crate::cur::{spectral_error, theorem_bound, CurFactorization, ErrorMode, ResidualOperator};
use crate::error::Result;
use crate::linalg::{argmax_abs, orthonormality_defect, singular_values};
use crate::matrix::{read_matrix_market, synth_sparse, LinearOperator, Matrix, SynthParams};
use crate::rng;
use crate::select::{deim, volume_sampling, SelectionMethod};
use crate::svd::{dense_svd_matrix, svds, SvdConfig};

/// Environment variable naming a directory of user-supplied datasets.
pub const DATA_DIR_ENV: &str = "ITERCUR_DATA_DIR";

pub const CRITERIA: [(usize, &str); 9] = [
    (1, "Krylov SVD matches dense SVD"),
    (2, "CUR error bound holds for DEIM indices"),
    (3, "single-round adaptive runs equal one-round DEIM"),
    (4, "implicit residual fidelity"),
    (5, "iterative methods beat one-round DEIM on synthetic data"),
    (6, "one-sided Frobenius residual is nonincreasing"),
    (7, "volume sampling follows squared column norms"),
    (8, "real dataset errors"),
    (9, "Wedin early stop picks the converged index"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub id: usize,
    pub title: &'static str,
    pub status: Status,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionReport {
    pub fn line(&self) -> String {
        let tag = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        };
        format!("[{tag}] {}. {} ({:.1} s): {}", self.id, self.title, self.seconds, self.detail)
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub tolerance_scale: f64,
    pub data_dir: Option<PathBuf>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            tolerance_scale: 1.0,
            data_dir: std::env::var_os(DATA_DIR_ENV).map(PathBuf::from),
        }
    }
}

struct Verdict {
    ok: Option<bool>,
    detail: String,
}

impl Verdict {
    fn check(ok: bool, detail: String) -> Result<Self> {
        Ok(Self { ok: Some(ok), detail })
    }
}

pub fn run(id: usize, opts: &VerifyOptions) -> CriterionReport {
    let title = CRITERIA
        .iter()
        .find(|(i, _)| *i == id)
        .map_or("unknown criterion", |(_, t)| t);
    let start = Instant::now();
    let outcome = match id {
        1 => svd_oracle(opts),
        2 => error_bound(opts),
        3 => degenerate_equivalence(opts),
        4 => implicit_residual(opts),
        5 => synthetic_trend(opts),
        6 => frobenius_monotone(opts),
        7 => volume_law(opts),
        8 => datasets(opts),
        9 => wedin_soundness(opts),
        _ => Ok(Verdict {
            ok: Some(false),
            detail: format!("no criterion {id}"),
        }),
    };
    let (status, detail) = match outcome {
        Ok(Verdict { ok: Some(true), detail }) => (Status::Pass, detail),
        Ok(Verdict { ok: Some(false), detail }) => (Status::Fail, detail),
        Ok(Verdict { ok: None, detail }) => (Status::Skip, detail),
        Err(e) => (Status::Fail, format!("error: {e}")),
    };
    CriterionReport {
        id,
        title,
        status,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn run_all(opts: &VerifyOptions) -> Vec<CriterionReport> {
    CRITERIA.iter().map(|&(id, _)| run(id, opts)).collect()
}

/// `U diag(decay^i) Vᵀ` with Haar-like random singular vectors.
pub fn spectrum_matrix(seed: u64, m: usize, n: usize, decay: f64) -> DMatrix<f64> {
    let mut g = rng::seeded(seed);
    let r = m.min(n);
    let u = rng::gaussian_matrix(&mut g, m, r).qr().q();
    let v = rng::gaussian_matrix(&mut g, n, r).qr().q();
    let s = DVector::from_fn(r, |i, _| decay.powi(i as i32));
    u * DMatrix::from_diagonal(&s) * v.transpose()
}

fn sorted(v: &[usize]) -> Vec<usize> {
    let mut v = v.to_vec();
    v.sort_unstable();
    v
}

/// `(I − QQᵀ)A` with `Q` an orthonormal basis for the columns `chosen`.
fn deflate(a: &DMatrix<f64>, chosen: &[usize]) -> DMatrix<f64> {
    if chosen.is_empty() {
        return a.clone();
    }
    let q = a.select_columns(chosen).qr().q();
    a - &q * q.tr_mul(a)
}

fn svd_oracle(o: &VerifyOptions) -> Result<Verdict> {
    let tol = 1e-8 * o.tolerance_scale;
    let mut worst = 0f64;
    let mut seconds = 0.0;
    let mut unconverged = 0;
    for i in 0..20u64 {
        let (m, n) = if i < 10 { (300, 200) } else { (150, 150) };
        let a = rng::gaussian_matrix(&mut rng::seeded(1000 + i), m, n);
        let t = Instant::now();
        let r = svds(&a, &SvdConfig::new(10).with_tol(1e-10).with_seed(i))?;
        seconds += t.elapsed().as_secs_f64();
        if !r.all_converged() {
            unconverged += 1;
        }
        let d = singular_values(&a);
        for (x, y) in r.s.iter().zip(&d) {
            worst = worst.max((x - y).abs() / y);
        }
    }
    Verdict::check(
        worst <= tol && seconds < 5.0 && unconverged == 0,
        format!("max relative error {worst:.2e} (tol {tol:.0e}), svds time {seconds:.2} s, {unconverged} unconverged"),
    )
}

fn error_bound(o: &VerifyOptions) -> Result<Verdict> {
    let mut violations = 0;
    let mut worst = 0f64;
    for i in 0..50u64 {
        let a = rng::gaussian_matrix(&mut rng::seeded(2000 + i), 40, 30);
        let svd = dense_svd_matrix(&a)?;
        for k in [2, 5] {
            let p = deim(&svd.v.columns(0, k).into_owned(), None)?;
            let s = deim(&svd.u.columns(0, k).into_owned(), None)?;
            let fact = CurFactorization::new(&a, &p, &s)?;
            let d = theorem_bound(&a, &fact)?;
            worst = worst.max(d.achieved / d.bound);
            if d.achieved > d.bound + 1e-10 * d.sigma1 * o.tolerance_scale {
                violations += 1;
            }
        }
    }
    Verdict::check(
        violations == 0,
        format!("100 cases, {violations} violations, max achieved/bound {worst:.3}"),
    )
}

fn degenerate_equivalence(_: &VerifyOptions) -> Result<Verdict> {
    let mut mismatches = Vec::new();
    for i in 0..20u64 {
        let (m, n, k) = (30 + 10 * (i as usize % 5), 25 + 8 * (i as usize % 4), 3 + i as usize % 5);
        let a = Matrix::Dense(rng::gaussian_matrix(&mut rng::seeded(3000 + i), m, n));
        for backend in [Backend::Dense, Backend::Krylov] {
            let base = one_round_cur(&a, k, SelectionMethod::Deim, backend, 1e-10, 0)?.factorization;
            let runs = [
                ("dadp-cx", dadp_cx(&a, k, 0.0, k, backend)?),
                ("dadp-cur", dadp_cur(&a, k, 0.0, k, backend)?),
                ("cadp-cx", cadp_cx(&a, k, k, backend)?),
                ("cadp-cur", cadp_cur(&a, k, k, backend)?),
            ];
            for (name, out) in runs {
                let f = &out.factorization;
                if sorted(f.p.as_slice()) != sorted(base.p.as_slice())
                    || sorted(f.s.as_slice()) != sorted(base.s.as_slice())
                {
                    mismatches.push(format!("{name}/{backend:?}/instance {i}"));
                }
            }
        }
    }
    Verdict::check(
        mismatches.is_empty(),
        format!("160 comparisons, {} mismatches {:?}", mismatches.len(), mismatches),
    )
}

/// Whether every decision in the dense run of `out` is separated from ties
/// by `1e-6·σ₁`: consecutive residual singular values within reach of the
/// round, and their distance from the decay threshold.
fn gaps_resolved(a: &DMatrix<f64>, rounds: &[RoundTrace], indices: impl Fn(&RoundTrace) -> &[usize], k: usize, delta: f64) -> bool {
    let mut chosen: Vec<usize> = Vec::new();
    for t in rounds {
        let s = singular_values(&deflate(a, &chosen));
        let s1 = s[0];
        let reach = (k - chosen.len()).min(s.len() - 1);
        for i in 0..=reach {
            if s[i] - s[i + 1] <= 1e-6 * s1 {
                return false;
            }
            if i > 0 && (s[i] - delta * s1).abs() <= 1e-6 * s1 {
                return false;
            }
        }
        chosen.extend_from_slice(indices(t));
    }
    true
}

fn implicit_residual(o: &VerifyOptions) -> Result<Verdict> {
    let mut worst = 0f64;
    let mut bad_vectors = 0;
    for i in 0..10u64 {
        let mut g = rng::seeded(4000 + i);
        let (m, n) = (40 + 5 * i as usize, 30 + 3 * i as usize);
        let a = rng::gaussian_matrix(&mut g, m, n);
        let j = 3 + i as usize % 4;
        let q = a.columns(0, j).into_owned().qr().q();
        let op = ResidualOperator::new(&a, q.clone())?;
        let explicit = &a - &q * q.tr_mul(&a);
        let fro = a.norm();
        for _ in 0..10 {
            let x = rng::gaussian_vector(&mut g, n);
            let diff = (op.apply(&x) - &explicit * &x).norm() / (fro * x.norm());
            worst = worst.max(diff);
            if diff > 1e-12 * o.tolerance_scale {
                bad_vectors += 1;
            }
        }
    }

    let sizes = [(100, 100), (80, 60), (60, 90), (100, 70), (50, 40), (90, 90), (70, 100), (64, 48), (100, 55), (45, 75)];
    let (k, delta, cap) = (12, 0.8, 3);
    let mut eligible = 0;
    let mut mismatches = Vec::new();
    let mut qr_defect = 0f64;
    for (i, &(m, n)) in sizes.iter().enumerate() {
        let d = spectrum_matrix(4100 + i as u64, m, n, 0.85);
        let a = Matrix::Dense(d.clone());
        let dense = dadp_cx(&a, k, delta, cap, Backend::Dense)?;
        let at = d.transpose();
        if !gaps_resolved(&d, &dense.column_rounds, |t| &t.columns, k, delta)
            || !gaps_resolved(&at, &dense.row_rounds, |t| &t.rows, k, delta)
        {
            continue;
        }
        eligible += 1;
        let large = dadp_cx_large(&a, k, delta, cap, 1e-10, i as u64)?;
        let seq = |o: &AdaptiveOutcome| -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
            (
                o.column_rounds.iter().map(|t| t.columns.clone()).collect(),
                o.row_rounds.iter().map(|t| t.rows.clone()).collect(),
            )
        };
        if seq(&dense) != seq(&large) {
            mismatches.push(i);
        }
        if let Some(qr) = &large.column_basis {
            let c = &large.factorization.c;
            qr_defect = qr_defect
                .max(orthonormality_defect(qr.q()))
                .max((qr.q() * qr.t() - c).amax() / c.amax());
        }
    }
    Verdict::check(
        bad_vectors == 0 && eligible >= 5 && mismatches.is_empty() && qr_defect <= 1e-10 * o.tolerance_scale,
        format!(
            "operator: max relative deviation {worst:.2e} over 100 vectors ({bad_vectors} over tol); \
             large vs dense: {eligible}/10 instances with resolved gaps, mismatched instances {mismatches:?}, \
             QR defect {qr_defect:.1e}"
        ),
    )
}

fn synthetic_trend(o: &VerifyOptions) -> Result<Verdict> {
    let (k, c, delta, cap) = (30, 3, 0.8, 3);
    let slack = 1.0 + 0.05 * o.tolerance_scale;
    let backend = Backend::Krylov;
    let mut good_seeds = 0;
    let mut lines = Vec::new();
    for seed in 1..=5u64 {
        let a = Matrix::Sparse(synth_sparse(&SynthParams::new(5000, 300, 0.025, seed))?);
        let base = one_round_cur(&a, k, SelectionMethod::Deim, backend, 1e-10, seed)?;
        let be = spectral_error(&a, &base.factorization, ErrorMode::Dense, None)?;
        let norm = Some(be.norm_a);
        let errs = [
            spectral_error(&a, &cadp_cx(&a, k, c, backend)?.factorization, ErrorMode::Dense, norm)?.relative,
            spectral_error(&a, &dadp_cx(&a, k, delta, cap, backend)?.factorization, ErrorMode::Dense, norm)?.relative,
            spectral_error(&a, &cadp_cur(&a, k, c, backend)?.factorization, ErrorMode::Dense, norm)?.relative,
            spectral_error(&a, &dadp_cur(&a, k, delta, cap, backend)?.factorization, ErrorMode::Dense, norm)?.relative,
        ];
        let within = errs.iter().all(|&e| e <= slack * be.relative);
        let lower = errs.iter().filter(|&&e| e < be.relative).count();
        if within && lower >= 3 {
            good_seeds += 1;
        }
        lines.push(format!(
            "seed {seed}: deim {:.4}, cadp-cx {:.4}, dadp-cx {:.4}, cadp-cur {:.4}, dadp-cur {:.4}",
            be.relative, errs[0], errs[1], errs[2], errs[3]
        ));
    }
    Verdict::check(good_seeds >= 4, format!("{good_seeds}/5 seeds satisfied; {}", lines.join("; ")))
}

fn frobenius_monotone(o: &VerifyOptions) -> Result<Verdict> {
    let mut violations = 0;
    let mut rounds = 0;
    for i in 0..50u64 {
        let iu = i as usize;
        let (m, n, k) = (30 + 5 * (iu % 7), 25 + 4 * (iu % 5), 8 + iu % 5);
        let a = Matrix::Dense(rng::gaussian_matrix(&mut rng::seeded(6000 + i), m, n));
        let out = if i % 2 == 0 {
            cadp_cx(&a, k, 1 + iu % 3, Backend::Dense)?
        } else {
            dadp_cx(&a, k, [0.5, 0.8, 1.0][iu % 3], 2, Backend::Dense)?
        };
        let fro = a.frobenius_norm();
        let slack = 1e-10 * fro * o.tolerance_scale;
        for side in [&out.column_rounds, &out.row_rounds] {
            let mut prev = fro;
            for t in side {
                rounds += 1;
                if t.residual_fro > prev + slack {
                    violations += 1;
                }
                prev = t.residual_fro;
            }
        }
    }
    Verdict::check(
        violations == 0,
        format!("50 runs, {rounds} rounds, {violations} increases"),
    )
}

fn volume_law(o: &VerifyOptions) -> Result<Verdict> {
    let a = DMatrix::from_column_slice(
        3,
        5,
        &[1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 0.0, 0.0, 1.0, 2.0, 0.0],
    );
    let a = Matrix::Dense(a);
    let norms = a.column_norms_squared();
    let total: f64 = norms.iter().sum();
    let draws = 10_000;
    let mut counts = [0usize; 5];
    for seed in 0..draws {
        let out = volume_sampling(&a, 1, 1, 1, 7000 + seed as u64)?;
        counts[out.indices[0]] += 1;
    }
    let mut worst = 0f64;
    for (j, &cnt) in counts.iter().enumerate() {
        let p = norms[j] / total;
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        worst = worst.max((cnt as f64 / draws as f64 - p).abs() / se);
    }
    Verdict::check(
        worst <= 3.0 * o.tolerance_scale,
        format!("counts {counts:?}, largest deviation {worst:.2} standard errors"),
    )
}

struct DatasetTarget {
    file: &'static str,
    normalize: bool,
    k: usize,
    tol: f64,
    expected: &'static [(&'static str, f64)],
}

const DATASETS: [DatasetTarget; 3] = [
    DatasetTarget {
        file: "reuters.mtx",
        normalize: true,
        k: 50,
        tol: 0.02,
        expected: &[("cadp-cx", 0.21), ("dadp-cx", 0.21), ("dadp-cur", 0.21), ("cadp-cur", 0.22)],
    },
    DatasetTarget {
        file: "g7jac100.mtx",
        normalize: false,
        k: 100,
        tol: 0.03,
        expected: &[("cadp-cx", 0.29), ("cadp-cur", 0.29)],
    },
    DatasetTarget {
        file: "invextr1_new.mtx",
        normalize: false,
        k: 500,
        tol: 0.02,
        expected: &[("cadp-cx", 0.13), ("cadp-cur", 0.13)],
    },
];

fn dataset_errors(path: &Path, target: &DatasetTarget, scale: f64) -> Result<(bool, Vec<String>)> {
    let mut a = read_matrix_market(path)?;
    if target.normalize {
        a = a.normalize_rows();
    }
    let k = target.k;
    let (c, cap) = (k.div_ceil(10), k.div_ceil(10));
    let mut ok = true;
    let mut lines = Vec::new();
    let mut norm = None;
    for &(method, want) in target.expected {
        let out = match method {
            "cadp-cx" => cadp_cx(&a, k, c, Backend::Auto)?,
            "dadp-cx" => dadp_cx(&a, k, 0.8, cap, Backend::Auto)?,
            "cadp-cur" => cadp_cur(&a, k, c, Backend::Auto)?,
            _ => dadp_cur(&a, k, 0.8, cap, Backend::Auto)?,
        };
        let e = spectral_error(&a, &out.factorization, ErrorMode::Operator, norm)?;
        norm = Some(e.norm_a);
        let hit = (e.relative - want).abs() <= target.tol * scale;
        ok &= hit;
        lines.push(format!("{} {method} {:.3} (expected {want})", target.file, e.relative));
    }
    Ok((ok, lines))
}

fn datasets(o: &VerifyOptions) -> Result<Verdict> {
    let Some(dir) = &o.data_dir else {
        return Ok(Verdict {
            ok: None,
            detail: format!("{DATA_DIR_ENV} not set"),
        });
    };
    let mut ok = true;
    let mut lines = Vec::new();
    for target in &DATASETS {
        let path = dir.join(target.file);
        if !path.exists() {
            lines.push(format!("{} missing", target.file));
            continue;
        }
        let (hit, mut l) = dataset_errors(&path, target, o.tolerance_scale)?;
        ok &= hit;
        lines.append(&mut l);
    }
    if lines.iter().all(|l| l.ends_with("missing")) {
        return Ok(Verdict {
            ok: None,
            detail: format!("no datasets found in {}", dir.display()),
        });
    }
    Verdict::check(ok, lines.join("; "))
}

/// Index the fully converged leading right vector of the deflated residual
/// would pick, with earlier picks masked.
fn converged_pick(a: &DMatrix<f64>, chosen: &[usize]) -> Result<usize> {
    let svd = dense_svd_matrix(&deflate(a, chosen))?;
    let mut v = svd.v.column(0).into_owned();
    for &j in chosen {
        v[j] = 0.0;
    }
    Ok(argmax_abs(v.iter().copied()).map_or(0, |(i, _)| i))
}

fn wedin_soundness(_: &VerifyOptions) -> Result<Verdict> {
    let mut fired = 0;
    let mut mismatches = 0;
    let mut rounds = 0;
    for i in 0..30u64 {
        let iu = i as usize;
        let (m, n, k) = (150 + 25 * (iu % 4), 100 + 25 * (iu % 3), 6);
        let d = spectrum_matrix(9000 + i, m, n, [0.9, 0.95, 0.98][iu % 3]);
        let out = dadp_cx_large(&Matrix::Dense(d.clone()), k, 1.0, 1, 1e-10, i)?;
        let at = d.transpose();
        let sides: [(&DMatrix<f64>, &Vec<RoundTrace>, fn(&RoundTrace) -> &[usize]); 2] = [
            (&d, &out.column_rounds, |t| &t.columns),
            (&at, &out.row_rounds, |t| &t.rows),
        ];
        for (mat, traces, indices) in sides {
            let mut chosen = Vec::new();
            for t in traces {
                rounds += 1;
                let picked = indices(t);
                if t.early_stop {
                    fired += 1;
                    if picked.first() != Some(&converged_pick(mat, &chosen)?) {
                        mismatches += 1;
                    }
                }
                chosen.extend_from_slice(picked);
            }
        }
    }
    Verdict::check(
        mismatches == 0 && fired > 0,
        format!("{rounds} rounds, early stop fired in {fired}, {mismatches} mismatches"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_criterion_fails() {
        assert_eq!(run(42, &VerifyOptions::default()).status, Status::Fail);
    }

    #[test]
    fn datasets_skip_without_directory() {
        let opts = VerifyOptions {
            tolerance_scale: 1.0,
            data_dir: None,
        };
        assert_eq!(run(8, &opts).status, Status::Skip);
    }

    #[test]
    fn spectrum_matrix_has_requested_values() {
        let s = singular_values(&spectrum_matrix(1, 12, 8, 0.5));
        for (i, x) in s.iter().enumerate() {
            assert!((x - 0.5f64.powi(i as i32)).abs() < 1e-12);
        }
    }
}
