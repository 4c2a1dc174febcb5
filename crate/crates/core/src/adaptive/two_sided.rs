use super::one_sided::{dense_round, krylov_round, RoundSvd};
use super::{check_fresh, AdaptiveConfig, AdaptiveOutcome, Backend, RoundTrace, Side, Strategy, CAPTURE_TOL};
use crate::cur::{frobenius_error, CurFactorization, CurResidualOperator};
use crate::error::Result;
use crate::matrix::{Matrix, DEFAULT_DENSE_CAP};
use crate::select::deim_with_fallback;

/// Two-sided adaptive CUR: each round picks columns and rows together from
/// the leading singular vectors of `E = A − CMR`, with rows of `V` at chosen
/// columns and rows of `U` at chosen rows zeroed first.
pub fn two_sided(a: &Matrix, cfg: &AdaptiveConfig) -> Result<AdaptiveOutcome> {
    cfg.validate(a)?;
    // The Wedin rule certifies only the right vector, and rows need the left.
    let cfg = AdaptiveConfig {
        wedin: false,
        mask: true,
        ..cfg.clone()
    };
    let dense = match cfg.backend.resolve(a) {
        Backend::Dense => Some(a.to_dense_capped(DEFAULT_DENSE_CAP)?),
        _ => None,
    };
    let mut p: Vec<usize> = Vec::with_capacity(cfg.k);
    let mut s: Vec<usize> = Vec::with_capacity(cfg.k);
    let mut fact: Option<CurFactorization> = None;
    let mut traces = Vec::new();
    let mut matvecs = 0;
    let mut sigma_a = 0.0;
    let mut exhausted = false;

    for round in 0.. {
        let remaining = cfg.k - p.len();
        if remaining == 0 {
            break;
        }
        let seed = cfg.seed.wrapping_add(round as u64);
        let step: RoundSvd = match (&dense, &fact) {
            (Some(d), None) => dense_round(d, &cfg.strategy, remaining)?,
            (Some(d), Some(f)) => dense_round(&(d - f.reconstruct()), &cfg.strategy, remaining)?,
            (None, None) => krylov_round(a, &cfg, remaining, seed, None, 0.0)?,
            (None, Some(f)) => {
                let op = CurResidualOperator::new(a, &f.c, &f.m, &f.r)?;
                krylov_round(&op, &cfg, remaining, seed, None, sigma_a)?
            }
        };
        let sigma1 = step.svd.sigma1();
        if round == 0 {
            sigma_a = sigma1;
        } else if sigma1 <= CAPTURE_TOL * sigma_a {
            log::info!("two-sided residual captured after {} indices", p.len());
            exhausted = true;
            break;
        }
        matvecs += step.svd.matvecs;

        let c = step.count;
        let vc = step.svd.v.columns(0, c).into_owned();
        let uc = step.svd.u.columns(0, c).into_owned();
        let cols = deim_with_fallback(&vc, Some(&p))?;
        let rows = deim_with_fallback(&uc, Some(&s))?;
        if !cols.fallback_steps.is_empty() || !rows.fallback_steps.is_empty() {
            log::warn!(
                "round {round}: masked DEIM fell back at column steps {:?}, row steps {:?}",
                cols.fallback_steps,
                rows.fallback_steps
            );
        }
        check_fresh(&p, &cols.indices)?;
        check_fresh(&s, &rows.indices)?;
        p.extend_from_slice(&cols.indices);
        s.extend_from_slice(&rows.indices);

        let f = CurFactorization::new(a, &p, &s)?;
        let residual_fro = match &dense {
            Some(d) => (d - f.reconstruct()).norm(),
            None => frobenius_error(a, &f).0,
        };
        let fallback_steps = cols
            .fallback_steps
            .iter()
            .copied()
            .chain(rows.fallback_steps.iter().map(|j| j + c))
            .collect();
        traces.push(RoundTrace {
            round,
            side: Side::Both,
            columns: cols.indices,
            rows: rows.indices,
            count: c,
            sigma1,
            b: step.b,
            matvecs: step.svd.matvecs,
            restarts: step.svd.restarts,
            svd_converged: step.svd.all_converged(),
            early_stop: step.svd.early_stop,
            fallback_steps,
            residual_fro,
        });
        fact = Some(f);
    }
    Ok(AdaptiveOutcome {
        factorization: fact.expect("k >= 1 guarantees one round"),
        column_rounds: traces,
        row_rounds: Vec::new(),
        column_basis: None,
        matvecs,
        exhausted,
    })
}

/// Fixed `c` columns and rows per round with two-sided residual.
pub fn cadp_cur(a: &Matrix, k: usize, c: usize, backend: Backend) -> Result<AdaptiveOutcome> {
    two_sided(a, &AdaptiveConfig::new(k, Strategy::Fixed { c }).with_backend(backend))
}

/// Decay-driven round sizes with two-sided residual.
pub fn dadp_cur(a: &Matrix, k: usize, delta: f64, cap: usize, backend: Backend) -> Result<AdaptiveOutcome> {
    let strategy = Strategy::Decay {
        delta,
        cap,
        strict: false,
    };
    two_sided(a, &AdaptiveConfig::new(k, strategy).with_backend(backend))
}
