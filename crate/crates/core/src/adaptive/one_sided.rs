use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{check_fresh, AdaptiveConfig, AdaptiveOutcome, Backend, RoundTrace, Side, Strategy, CAPTURE_TOL};
use crate::cur::{CurFactorization, IncrementalQr, ResidualOperator};
use crate::error::{CurError, Result};
use crate::matrix::{LinearOperator, Matrix, DEFAULT_DENSE_CAP};
use crate::rng::{self, CurRng};
use crate::select::{deim, leverage_scores, sample_with};
use crate::svd::{dense_svd_matrix, svds, SvdConfig, SvdResult};

/// How a round turns singular vectors into indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Selector {
    Deim,
    /// Sample without replacement from the leverage scores of the block.
    Leverage,
}

/// One round's singular triplets and how many of them to use.
pub(crate) struct RoundSvd {
    pub svd: SvdResult,
    pub count: usize,
    pub b: Option<usize>,
}

/// `b`: the last `i ≤ limit` whose `σ_i` passes the decay threshold.
pub(crate) fn decay_b(strategy: &Strategy, sigma: &[f64], limit: usize) -> Option<usize> {
    let gate = strategy.gate()?;
    let s1 = *sigma.first()?;
    let horizon = limit.min(sigma.len());
    Some(sigma[..horizon].iter().take_while(|&&s| gate.passes(s, s1)).count())
}

/// Singular triplets of an explicit residual.
pub(crate) fn dense_round(e: &DMatrix<f64>, strategy: &Strategy, remaining: usize) -> Result<RoundSvd> {
    let svd = dense_svd_matrix(e)?;
    let limit = strategy.limit(remaining).min(svd.rank());
    let (count, b) = match strategy.gate() {
        None => (limit, None),
        Some(g) => {
            let c = g
                .count(&svd.s, svd.rank(), remaining)
                .expect("all dense values are trusted");
            (c, decay_b(strategy, &svd.s, remaining))
        }
    };
    Ok(RoundSvd { svd, count, b })
}

/// Leading triplets of a matrix-free residual, retried once with a doubled
/// subspace if the first attempt does not converge.
pub(crate) fn krylov_round<O: LinearOperator + ?Sized>(
    op: &O,
    cfg: &AdaptiveConfig,
    remaining: usize,
    seed: u64,
    start: Option<DVector<f64>>,
    scale: f64,
) -> Result<RoundSvd> {
    let kmax = op.nrows().min(op.ncols());
    let want = match cfg.strategy {
        Strategy::Fixed { .. } => cfg.strategy.limit(remaining),
        Strategy::Decay { .. } => remaining,
    }
    .min(kmax);
    let mut svd_cfg = SvdConfig::new(want).with_tol(cfg.svd_tol).with_seed(seed);
    svd_cfg.start = start;
    svd_cfg.abs_tol = 1e-14 * scale;
    svd_cfg.gate = cfg.strategy.gate();
    svd_cfg.wedin_early_stop = cfg.wedin_active();
    let target = svd_cfg.gate.map_or(want, |g| want.min(g.cap));

    let mut svd = svds(op, &svd_cfg)?;
    let mut matvecs = svd.matvecs;
    let mut restarts = svd.restarts;
    if !svd.all_converged() && !svd.early_stop {
        log::warn!("round SVD did not converge; retrying with a doubled subspace");
        svd_cfg.max_dim = Some(2 * (2 * target + 10));
        svd = svds(op, &svd_cfg)?;
        matvecs += svd.matvecs;
        restarts += svd.restarts;
        if !svd.all_converged() && !svd.early_stop {
            return Err(CurError::NotConverged(format!(
                "{} of {} triplets converged after {} matvecs (residual {:.3e}, σ̂₁ {:.3e})",
                svd.converged.iter().filter(|&&c| c).count(),
                svd.rank(),
                matvecs,
                svd.residual_norm,
                svd.sigma1()
            )));
        }
    }
    svd.matvecs = matvecs;
    svd.restarts = restarts;
    let count = match cfg.strategy {
        Strategy::Fixed { .. } => want.min(svd.rank()),
        Strategy::Decay { .. } => svd.rank(),
    };
    Ok(RoundSvd { svd, count, b: None })
}

/// A seeded unit start vector with the entries at `masked` removed.
pub(crate) fn masked_start(n: usize, masked: &[usize], seed: u64) -> Option<DVector<f64>> {
    if masked.is_empty() {
        return None;
    }
    let mut v = rng::unit_vector(&mut rng::seeded(seed), n);
    for &j in masked {
        v[j] = 0.0;
    }
    let norm = v.norm();
    (norm > 0.0).then(|| v / norm)
}

pub(crate) fn pick(
    block: &DMatrix<f64>,
    chosen: &[usize],
    selector: Selector,
    mask: bool,
    rng: &mut CurRng,
) -> Result<Vec<usize>> {
    match selector {
        Selector::Deim => deim(block, mask.then_some(chosen)),
        Selector::Leverage => {
            let dist = leverage_scores(block)?.excluding(chosen)?;
            sample_with(&dist, block.ncols(), rng)
        }
    }
}

struct SideOutcome {
    indices: Vec<usize>,
    traces: Vec<RoundTrace>,
    qr: IncrementalQr,
    first: Option<SvdResult>,
    matvecs: usize,
    exhausted: bool,
}

/// Column selection on `a` by rounds of deflation `E = (I − QQᵀ)A`.
fn run_side(
    a: &Matrix,
    side: Side,
    cfg: &AdaptiveConfig,
    backend: Backend,
    mut first: Option<SvdResult>,
    selector: Selector,
    seed: u64,
) -> Result<SideOutcome> {
    let (m, n) = a.shape();
    let dense = match backend {
        Backend::Dense => Some(a.to_dense_capped(DEFAULT_DENSE_CAP)?),
        _ => None,
    };
    let fro_a2 = a.frobenius_norm().powi(2);
    let mut captured2 = 0.0;
    let mut qr = IncrementalQr::new(m);
    let mut chosen: Vec<usize> = Vec::with_capacity(cfg.k);
    let mut traces = Vec::new();
    let mut matvecs = 0;
    let mut sigma_a = 0.0;
    let mut kept_first = None;
    let mut exhausted = false;
    let mut sampler = rng::seeded(seed ^ 0x6c65_7665_7261_6765);

    for round in 0.. {
        let remaining = cfg.k - chosen.len();
        if remaining == 0 {
            break;
        }
        let round_seed = seed.wrapping_add(round as u64);
        let step = match (first.take(), &dense) {
            (Some(svd), _) => {
                let count = match cfg.strategy {
                    Strategy::Fixed { .. } => cfg.strategy.limit(remaining).min(svd.rank()),
                    Strategy::Decay { .. } => match &dense {
                        Some(_) => cfg
                            .strategy
                            .gate()
                            .and_then(|g| g.count(&svd.s, svd.rank(), remaining))
                            .unwrap_or(1),
                        None => svd.rank(),
                    },
                };
                let b = dense.as_ref().and_then(|_| decay_b(&cfg.strategy, &svd.s, remaining));
                RoundSvd { svd, count, b }
            }
            (None, Some(d)) => {
                let e = if qr.is_empty() { d.clone() } else { d - qr.q() * qr.q().tr_mul(d) };
                dense_round(&e, &cfg.strategy, remaining)?
            }
            (None, None) => {
                let op = ResidualOperator::new(a, qr.q().clone())?;
                let start = masked_start(n, &chosen, round_seed);
                krylov_round(&op, cfg, remaining, round_seed, start, sigma_a)?
            }
        };
        let sigma1 = step.svd.sigma1();
        if round == 0 {
            sigma_a = sigma1;
            kept_first = Some(step.svd.clone());
        } else if sigma1 <= CAPTURE_TOL * sigma_a {
            log::info!("residual captured after {} indices", chosen.len());
            exhausted = true;
            break;
        }
        matvecs += step.svd.matvecs;

        let block = step.svd.v.columns(0, step.count).into_owned();
        let new = pick(&block, &chosen, selector, cfg.mask, &mut sampler)?;
        check_fresh(&chosen, &new)?;
        let cols = a.columns(&new);
        let before = qr.len();
        qr.append_block(&cols, &new)?;
        chosen.extend_from_slice(&new);

        let residual_fro = match &dense {
            Some(d) => (d - qr.q() * qr.q().tr_mul(d)).norm(),
            None => {
                let fresh = qr.q().columns(before, qr.len() - before).into_owned();
                captured2 += a.apply_adjoint_block(&fresh).norm_squared();
                matvecs += fresh.ncols();
                (fro_a2 - captured2).max(0.0).sqrt()
            }
        };
        traces.push(RoundTrace {
            round,
            side,
            columns: if side == Side::Columns { new.clone() } else { Vec::new() },
            rows: if side == Side::Rows { new.clone() } else { Vec::new() },
            count: new.len(),
            sigma1,
            b: step.b,
            matvecs: step.svd.matvecs,
            restarts: step.svd.restarts,
            svd_converged: step.svd.all_converged(),
            early_stop: step.svd.early_stop,
            fallback_steps: Vec::new(),
            residual_fro,
        });
    }
    Ok(SideOutcome {
        indices: chosen,
        traces,
        qr,
        first: kept_first,
        matvecs,
        exhausted,
    })
}

/// One-sided adaptive CUR: columns from rounds on `A`, rows from rounds on
/// `Aᵀ` (the first row round reuses the initial SVD of `A`), then
/// `M = C⁺AR⁺`.
pub fn one_sided(a: &Matrix, cfg: &AdaptiveConfig, selector: Selector) -> Result<AdaptiveOutcome> {
    cfg.validate(a)?;
    let backend = cfg.backend.resolve(a);
    let cols = run_side(a, Side::Columns, cfg, backend, None, selector, cfg.seed)?;
    let at = a.transpose();
    // An early-stopped round certifies only its right vector.
    let reuse = cols.first.as_ref().filter(|svd| !svd.early_stop).map(|svd| SvdResult {
        matvecs: 0,
        restarts: 0,
        ..svd.transposed()
    });
    let rows = run_side(
        &at,
        Side::Rows,
        cfg,
        backend,
        reuse,
        selector,
        cfg.seed.wrapping_add(1 << 32),
    )?;
    let factorization = CurFactorization::new(a, &cols.indices, &rows.indices)?;
    Ok(AdaptiveOutcome {
        factorization,
        column_rounds: cols.traces,
        row_rounds: rows.traces,
        column_basis: Some(cols.qr),
        matvecs: cols.matvecs + rows.matvecs,
        exhausted: cols.exhausted || rows.exhausted,
    })
}

/// Fixed `c` indices per round with one-sided residual.
pub fn cadp_cx(a: &Matrix, k: usize, c: usize, backend: Backend) -> Result<AdaptiveOutcome> {
    let cfg = AdaptiveConfig::new(k, Strategy::Fixed { c }).with_backend(backend);
    one_sided(a, &cfg, Selector::Deim)
}

/// Decay-driven round sizes with one-sided residual.
pub fn dadp_cx(a: &Matrix, k: usize, delta: f64, cap: usize, backend: Backend) -> Result<AdaptiveOutcome> {
    let strategy = Strategy::Decay {
        delta,
        cap,
        strict: false,
    };
    one_sided(a, &AdaptiveConfig::new(k, strategy).with_backend(backend), Selector::Deim)
}

/// [`dadp_cx`] on the matrix-free residual with an explicit SVD tolerance.
pub fn dadp_cx_large(
    a: &Matrix,
    k: usize,
    delta: f64,
    cap: usize,
    svd_tol: f64,
    seed: u64,
) -> Result<AdaptiveOutcome> {
    let strategy = Strategy::Decay {
        delta,
        cap,
        strict: false,
    };
    let mut cfg = AdaptiveConfig::new(k, strategy)
        .with_backend(Backend::Krylov)
        .with_seed(seed);
    cfg.svd_tol = svd_tol;
    one_sided(a, &cfg, Selector::Deim)
}

/// [`cadp_cx`] with leverage-score sampling in place of DEIM, on the
/// matrix-free residual.
pub fn cadp_cx_lvg(a: &Matrix, k: usize, c: usize, seed: u64) -> Result<AdaptiveOutcome> {
    let cfg = AdaptiveConfig::new(k, Strategy::Fixed { c })
        .with_backend(Backend::Krylov)
        .with_seed(seed);
    one_sided(a, &cfg, Selector::Leverage)
}
