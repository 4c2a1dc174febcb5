use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::cur::IncrementalQr;
use crate::error::{CurError, Result};
use crate::matrix::{LinearOperator, Matrix};
use crate::rng::{self, CurRng};

/// Probabilities over `n` items, nonnegative and summing to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplingDistribution {
    probs: Vec<f64>,
}

impl SamplingDistribution {
    /// Normalizes nonnegative finite weights with a positive sum.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(CurError::InvalidArgument(
                "sampling weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(CurError::InsufficientSupport {
                requested: 1,
                available: 0,
            });
        }
        Ok(Self {
            probs: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::from_weights(vec![1.0; n])
    }

    /// Squared column norms of `a`, with `excluded` columns set to zero.
    pub fn squared_column_norms(a: &Matrix, excluded: &[usize]) -> Result<Self> {
        let mut w = a.column_norms_squared();
        for &j in excluded {
            if let Some(x) = w.get_mut(j) {
                *x = 0.0;
            }
        }
        Self::from_weights(w)
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Number of items with positive probability.
    pub fn support(&self) -> usize {
        self.probs.iter().filter(|&&p| p > 0.0).count()
    }

    /// Zeroes `excluded` and renormalizes.
    pub fn excluding(&self, excluded: &[usize]) -> Result<Self> {
        let mut w = self.probs.clone();
        for &j in excluded {
            if let Some(x) = w.get_mut(j) {
                *x = 0.0;
            }
        }
        Self::from_weights(w)
    }
}

/// `pr_j = ‖V(j,:)‖² / k` for `V` with `k` orthonormal columns.
pub fn leverage_scores(v: &DMatrix<f64>) -> Result<SamplingDistribution> {
    if v.ncols() == 0 {
        return Err(CurError::InvalidArgument("leverage scores of an empty basis".into()));
    }
    let deviation = v
        .column_iter()
        .map(|c| (c.norm() - 1.0).abs())
        .fold(0.0f64, f64::max);
    if deviation > 1e-6 {
        return Err(CurError::NotOrthonormal { deviation });
    }
    let weights = v.row_iter().map(|r| r.norm_squared()).collect();
    SamplingDistribution::from_weights(weights)
}

/// Draws `count` distinct indices one at a time, renormalizing over the
/// remaining mass after each draw.
pub fn sample_with(dist: &SamplingDistribution, count: usize, rng: &mut CurRng) -> Result<Vec<usize>> {
    let available = dist.support();
    if count > available {
        return Err(CurError::InsufficientSupport {
            requested: count,
            available,
        });
    }
    let mut w = dist.probs.clone();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let total: f64 = w.iter().sum();
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, &x) in w.iter().enumerate() {
            if x <= 0.0 {
                continue;
            }
            acc += x;
            pick = Some(i);
            if acc > target {
                break;
            }
        }
        let i = pick.expect("positive mass remains");
        w[i] = 0.0;
        out.push(i);
    }
    Ok(out)
}

/// [`sample_with`] on a fresh generator seeded with `seed`.
pub fn sample_distribution(dist: &SamplingDistribution, count: usize, seed: u64) -> Result<Vec<usize>> {
    sample_with(dist, count, &mut rng::seeded(seed))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VolumeSamplingOutcome {
    pub indices: Vec<usize>,
    /// `‖E_{i−1}‖_F` at the start of each round that ran.
    pub residual_norms: Vec<f64>,
    /// Set when the residual ran out of columns before `k` were chosen.
    pub warning: Option<String>,
}

/// Residual squared column norms `‖a_j‖² − ‖Qᵀa_j‖²`, clamped at zero and
/// treated as zero below rounding level.
fn residual_column_norms(a: &Matrix, base: &[f64], qr: &IncrementalQr) -> Vec<f64> {
    if qr.is_empty() {
        return base.to_vec();
    }
    let proj = a.apply_adjoint_block(qr.q()); // n × j
    base.iter()
        .enumerate()
        .map(|(j, &b)| {
            let r = b - proj.row(j).norm_squared();
            if r <= 64.0 * f64::EPSILON * b { 0.0 } else { r }
        })
        .collect()
}

/// Randomized multi-round column sampling: `t` rounds of `c` columns, each
/// round drawn by squared column norms of `E = A − CC⁺A`.
pub fn volume_sampling(a: &Matrix, k: usize, t: usize, c: usize, seed: u64) -> Result<VolumeSamplingOutcome> {
    let n = a.ncols();
    if c == 0 || t == 0 || t * c != k || k > n {
        return Err(CurError::InvalidArgument(format!(
            "volume sampling needs t*c = k <= n, got t={t}, c={c}, k={k}, n={n}"
        )));
    }
    let mut g = rng::seeded(seed);
    let base = a.column_norms_squared();
    let total: f64 = base.iter().sum();
    let mut qr = IncrementalQr::new(a.nrows());
    let mut out = VolumeSamplingOutcome {
        indices: Vec::with_capacity(k),
        residual_norms: Vec::with_capacity(t),
        warning: None,
    };
    for _ in 0..t {
        let mut w = residual_column_norms(a, &base, &qr);
        for &j in &out.indices {
            w[j] = 0.0;
        }
        let mass: f64 = w.iter().sum();
        out.residual_norms.push(mass.sqrt());
        if mass.sqrt() <= 1e-10 * total.sqrt() {
            out.warning = Some(format!(
                "residual captured after {} columns; stopping early",
                out.indices.len()
            ));
            break;
        }
        let dist = SamplingDistribution::from_weights(w)?;
        let take = c.min(dist.support());
        let chosen = sample_with(&dist, take, &mut g)?;
        qr.append_block(&a.columns(&chosen), &chosen)?;
        out.indices.extend_from_slice(&chosen);
        if take < c {
            out.warning = Some(format!(
                "only {take} columns with nonzero residual remained; stopping early"
            ));
            break;
        }
    }
    if let Some(w) = &out.warning {
        log::warn!("{w}");
    }
    Ok(out)
}
