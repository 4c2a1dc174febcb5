//! Multi-round index selection.
//!
//! Each round takes a few leading singular vectors of the current residual,
//! picks indices from them, and deflates the residual by what the chosen
//! columns (and rows) capture. The one-sided drivers ([`cadp_cx`],
//! [`dadp_cx`]) deflate with `E = A − CC⁺A` and repeat on `Aᵀ` for the rows;
//! the two-sided drivers ([`cadp_cur`], [`dadp_cur`]) pick columns and rows
//! together from `E = A − CMR`.

mod baseline;
mod one_sided;
mod two_sided;

use serde::Serialize;

pub use baseline::{one_round_cur, volume_cur, OneRoundOutcome};
pub use one_sided::{cadp_cx, cadp_cx_lvg, dadp_cx, dadp_cx_large, one_sided, Selector};
pub use two_sided::{cadp_cur, dadp_cur, two_sided};

use crate::cur::{CurFactorization, IncrementalQr};
use crate::error::{CurError, Result};
use crate::matrix::Matrix;
use crate::svd::DecayGate;

/// Entry count up to which [`Backend::Auto`] works on explicit residuals.
pub const AUTO_DENSE_LIMIT: usize = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Strategy {
    /// `c` indices per round; the last round takes what is left.
    Fixed { c: usize },
    /// `c = min(b, cap)` with `b` the last `i ≤ k − |p|` such that `σ_i ≥ δσ₁`
    /// (`>` when `strict`).
    Decay { delta: f64, cap: usize, strict: bool },
}

impl Strategy {
    /// Fixed strategy with `t` rounds: `c = ⌈k/t⌉`.
    pub fn rounds(k: usize, t: usize) -> Self {
        Strategy::Fixed {
            c: k.div_ceil(t.max(1)).max(1),
        }
    }

    /// Decay strategy with the default `δ = 0.8` and `ℓ = ⌈k/10⌉`.
    pub fn default_decay(k: usize) -> Self {
        Strategy::Decay {
            delta: 0.8,
            cap: k.div_ceil(10).max(1),
            strict: false,
        }
    }

    pub(crate) fn gate(&self) -> Option<DecayGate> {
        match *self {
            Strategy::Fixed { .. } => None,
            Strategy::Decay { delta, cap, strict } => Some(DecayGate { delta, cap, strict }),
        }
    }

    /// Largest count this round may take with `remaining` indices to go.
    pub(crate) fn limit(&self, remaining: usize) -> usize {
        match *self {
            Strategy::Fixed { c } => c.min(remaining),
            Strategy::Decay { cap, .. } => cap.min(remaining),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Strategy::Fixed { c: 0 } => Err(CurError::InvalidArgument(
                "fixed strategy needs c >= 1".into(),
            )),
            Strategy::Fixed { .. } => Ok(()),
            Strategy::Decay { .. } => self.gate().expect("decay gate").validate(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Full SVD of the explicit residual each round.
    Dense,
    /// Lanczos on the matrix-free residual operator.
    Krylov,
    /// Dense up to [`AUTO_DENSE_LIMIT`] entries, Krylov beyond.
    Auto,
}

impl Backend {
    pub fn resolve(self, a: &Matrix) -> Backend {
        match self {
            Backend::Auto if a.nrows().saturating_mul(a.ncols()) <= AUTO_DENSE_LIMIT => Backend::Dense,
            Backend::Auto => Backend::Krylov,
            b => b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdaptiveConfig {
    pub k: usize,
    pub strategy: Strategy,
    pub backend: Backend,
    /// Relative tolerance handed to the Lanczos solver.
    pub svd_tol: f64,
    pub seed: u64,
    /// Zero singular-vector rows at already chosen indices before DEIM.
    /// Always on for two-sided runs.
    pub mask: bool,
    /// Let the Wedin gap rule end a round's SVD early (only used when δ = 1).
    pub wedin: bool,
}

impl AdaptiveConfig {
    pub fn new(k: usize, strategy: Strategy) -> Self {
        Self {
            k,
            strategy,
            backend: Backend::Auto,
            svd_tol: 1e-10,
            seed: 0,
            mask: true,
            wedin: true,
        }
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub(crate) fn validate(&self, a: &Matrix) -> Result<()> {
        let kmax = a.nrows().min(a.ncols());
        if self.k == 0 || self.k > kmax {
            return Err(CurError::InvalidArgument(format!(
                "rank {} outside 1..={kmax}",
                self.k
            )));
        }
        if !(self.svd_tol > 0.0) {
            return Err(CurError::InvalidArgument("SVD tolerance must be positive".into()));
        }
        self.strategy.validate()
    }

    pub(crate) fn wedin_active(&self) -> bool {
        self.wedin && matches!(self.strategy, Strategy::Decay { delta, .. } if delta == 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Columns,
    Rows,
    Both,
}

/// What happened in one round.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundTrace {
    pub round: usize,
    pub side: Side,
    pub columns: Vec<usize>,
    pub rows: Vec<usize>,
    pub count: usize,
    /// `σ₁` of the residual this round selected from.
    pub sigma1: f64,
    /// Decay count before capping, when a decay strategy is in use.
    pub b: Option<usize>,
    pub matvecs: usize,
    pub restarts: usize,
    pub svd_converged: bool,
    /// The Wedin rule released the leading vector early.
    pub early_stop: bool,
    /// DEIM steps that fell back to the raw column (two-sided masking).
    pub fallback_steps: Vec<usize>,
    /// `‖E‖_F` after this round's deflation.
    pub residual_fro: f64,
}

#[derive(Debug, Clone)]
pub struct AdaptiveOutcome {
    pub factorization: CurFactorization,
    pub column_rounds: Vec<RoundTrace>,
    pub row_rounds: Vec<RoundTrace>,
    /// Incremental QR of `C` (one-sided runs only).
    pub column_basis: Option<IncrementalQr>,
    pub matvecs: usize,
    /// Set when the residual vanished before `k` indices were chosen.
    pub exhausted: bool,
}

impl AdaptiveOutcome {
    pub fn rounds(&self) -> impl Iterator<Item = &RoundTrace> {
        self.column_rounds.iter().chain(&self.row_rounds)
    }
}

/// Relative size of `σ₁(E)` below which the residual counts as zero.
pub(crate) const CAPTURE_TOL: f64 = 1e-10;

pub(crate) fn check_fresh(chosen: &[usize], new: &[usize]) -> Result<()> {
    for (i, &x) in new.iter().enumerate() {
        if chosen.contains(&x) || new[..i].contains(&x) {
            return Err(CurError::DuplicateIndex { index: x });
        }
    }
    Ok(())
}
