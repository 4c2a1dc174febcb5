use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use itercur::adaptive::{
    one_round_cur, one_sided, two_sided, volume_cur, AdaptiveConfig, Backend, RoundTrace, Selector,
    Strategy,
};
use itercur::cur::{
    frobenius_error, spectral_error, theorem_bound, CurDiagnostics, CurFactorization, ErrorMode,
};
use itercur::matrix::{read_matrix_market, synth_sparse, Matrix, SynthParams};
use itercur::select::SelectionMethod;
use itercur::{CurError, Result};
use serde::{Deserialize, Serialize};

use crate::spec::{InputSpec, Method, Resolved, RunSpec};

pub const SCHEMA_VERSION: &str = "itercur.run-report/1";

/// Entry count up to which errors and diagnostics are computed densely.
const DENSE_METRIC_LIMIT: usize = 4_000_000;

pub fn load_input(input: &InputSpec, normalize: bool) -> Result<Matrix> {
    let a = match input {
        InputSpec::File { path } => read_matrix_market(path)?,
        InputSpec::Synth {
            rows,
            cols,
            density,
            terms,
            seed,
        } => {
            let mut p = SynthParams::new(*rows, *cols, *density, *seed);
            p.terms = *terms;
            Matrix::Sparse(synth_sparse(&p)?)
        }
    };
    Ok(if normalize { a.normalize_rows() } else { a })
}

/// Norms of an input matrix, cached next to the file it came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub spectral: f64,
    pub frobenius: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct NormCache {
    file_len: u64,
    modified_secs: u64,
    normalized: bool,
    norms: Norms,
}

pub fn sidecar_path(path: &Path, normalized: bool) -> PathBuf {
    let suffix = if normalized { "norms.rownorm.json" } else { "norms.json" };
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".");
    name.push(suffix);
    path.with_file_name(name)
}

fn file_stamp(path: &Path) -> Option<(u64, u64)> {
    let meta = fs::metadata(path).ok()?;
    let modified = meta
        .modified()
        .ok()?
        .duration_since(std::time::UNIX_EPOCH)
        .ok()?
        .as_secs();
    Some((meta.len(), modified))
}

fn compute_norms(a: &Matrix) -> Result<Norms> {
    let spectral = if a.nrows() * a.ncols() <= DENSE_METRIC_LIMIT {
        itercur::linalg::spectral_norm(&a.to_dense())
    } else {
        itercur::cur::operator_norm(a, 0)?.value
    };
    Ok(Norms {
        spectral,
        frobenius: a.frobenius_norm(),
    })
}

/// Norms of `a`, read from or written to the sidecar when the input is a file.
pub fn input_norms(input: &InputSpec, normalized: bool, a: &Matrix) -> Result<Norms> {
    let InputSpec::File { path } = input else {
        return compute_norms(a);
    };
    let side = sidecar_path(path, normalized);
    let stamp = file_stamp(path);
    if let Some((len, secs)) = stamp {
        if let Ok(text) = fs::read_to_string(&side) {
            if let Ok(c) = serde_json::from_str::<NormCache>(&text) {
                if c.file_len == len && c.modified_secs == secs && c.normalized == normalized {
                    return Ok(c.norms);
                }
            }
        }
    }
    let norms = compute_norms(a)?;
    if let Some((file_len, modified_secs)) = stamp {
        let cache = NormCache {
            file_len,
            modified_secs,
            normalized,
            norms,
        };
        if let Err(e) = fs::write(&side, serde_json::to_string_pretty(&cache).expect("plain data")) {
            log::warn!("could not write norm cache {}: {e}", side.display());
        }
    }
    Ok(norms)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ErrorPair {
    pub absolute: f64,
    pub relative: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: &'static str,
    pub spec: RunSpec,
    pub resolved: Resolved,
    pub rows: usize,
    pub cols: usize,
    pub nnz: usize,
    pub spectral_error: Option<ErrorPair>,
    pub frobenius_error: Option<ErrorPair>,
    /// Quantities of the `(η_s + η_p)·σ_{k+1}` bound; dense-sized inputs only.
    pub diagnostics: Option<CurDiagnostics>,
    pub seconds: f64,
    pub matvecs: usize,
    pub columns: Vec<usize>,
    pub row_indices: Vec<usize>,
    pub rounds: Vec<RoundTrace>,
    pub exhausted: bool,
    pub warnings: Vec<String>,
}

struct Selected {
    factorization: CurFactorization,
    matvecs: usize,
    rounds: Vec<RoundTrace>,
    exhausted: bool,
    warnings: Vec<String>,
}

fn select(a: &Matrix, spec: &RunSpec, r: &Resolved) -> Result<Selected> {
    let k = spec.k;
    let one_round = |method| -> Result<Selected> {
        let out = one_round_cur(a, k, method, r.backend, spec.svd_tol, spec.seed)?;
        let mut warnings = out.warnings;
        if !out.svd_converged {
            warnings.push("SVD did not fully converge".into());
        }
        Ok(Selected {
            factorization: out.factorization,
            matvecs: out.matvecs,
            rounds: Vec::new(),
            exhausted: false,
            warnings,
        })
    };
    let strategy = match (r.c, r.delta) {
        (_, Some(delta)) => Strategy::Decay {
            delta,
            cap: r.cap.expect("resolved with delta"),
            strict: false,
        },
        (c, None) => Strategy::Fixed { c: c.unwrap_or(1) },
    };
    let mut cfg = AdaptiveConfig::new(k, strategy)
        .with_backend(r.backend)
        .with_seed(spec.seed);
    cfg.svd_tol = spec.svd_tol;
    let out = match spec.method {
        Method::Deim => return one_round(SelectionMethod::Deim),
        Method::Qdeim => return one_round(SelectionMethod::Qdeim),
        Method::Maxvol => return one_round(SelectionMethod::Maxvol),
        Method::Volume => {
            let out = volume_cur(a, k, r.t.expect("resolved"), r.c.expect("resolved"), spec.seed)?;
            return Ok(Selected {
                factorization: out.factorization,
                matvecs: 0,
                rounds: Vec::new(),
                exhausted: false,
                warnings: out.warnings,
            });
        }
        Method::Lvg => one_sided(a, &cfg.with_backend(Backend::Krylov), Selector::Leverage)?,
        Method::CadpCx | Method::DadpCx => one_sided(a, &cfg, Selector::Deim)?,
        Method::CadpCur | Method::DadpCur => two_sided(a, &cfg)?,
    };
    let rounds: Vec<RoundTrace> = out.rounds().cloned().collect();
    let mut warnings = Vec::new();
    if out.exhausted {
        warnings.push(format!(
            "residual captured early; {} columns and {} rows selected",
            out.factorization.p.len(),
            out.factorization.s.len()
        ));
    }
    for t in rounds.iter().filter(|t| !t.fallback_steps.is_empty()) {
        warnings.push(format!("round {}: DEIM fallback at steps {:?}", t.round, t.fallback_steps));
    }
    Ok(Selected {
        factorization: out.factorization,
        matvecs: out.matvecs,
        rounds,
        exhausted: out.exhausted,
        warnings,
    })
}

/// Runs one spec on an already loaded matrix.
pub fn execute(spec: &RunSpec, a: &Matrix, norms: Option<Norms>) -> Result<RunReport> {
    let resolved = spec.resolve()?;
    let kmax = a.nrows().min(a.ncols());
    if spec.k > kmax {
        return Err(CurError::InvalidArgument(format!(
            "rank {} exceeds min(m, n) = {kmax}",
            spec.k
        )));
    }
    let start = Instant::now();
    let sel = select(a, spec, &resolved)?;
    let seconds = start.elapsed().as_secs_f64();
    let fact = &sel.factorization;
    let dense_ok = a.nrows() * a.ncols() <= DENSE_METRIC_LIMIT;
    let mut warnings = sel.warnings;

    let spectral = if spec.norm.spectral() {
        let mode = if dense_ok { ErrorMode::Dense } else { ErrorMode::Operator };
        let e = spectral_error(a, fact, mode, norms.map(|n| n.spectral))?;
        if !e.converged {
            warnings.push("spectral norm estimate did not converge".into());
        }
        Some(ErrorPair {
            absolute: e.absolute,
            relative: e.relative,
        })
    } else {
        None
    };
    let frobenius = spec.norm.frobenius().then(|| {
        let (absolute, relative) = frobenius_error(a, fact);
        ErrorPair { absolute, relative }
    });
    let diagnostics = if dense_ok && fact.p.len() == fact.s.len() {
        match theorem_bound(&a.to_dense(), fact) {
            Ok(d) => Some(d),
            Err(e) => {
                warnings.push(format!("bound diagnostics unavailable: {e}"));
                None
            }
        }
    } else {
        None
    };
    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        spec: spec.clone(),
        resolved,
        rows: a.nrows(),
        cols: a.ncols(),
        nnz: a.nnz(),
        spectral_error: spectral,
        frobenius_error: frobenius,
        diagnostics,
        seconds,
        matvecs: sel.matvecs,
        columns: fact.p.as_slice().to_vec(),
        row_indices: fact.s.as_slice().to_vec(),
        rounds: sel.rounds,
        exhausted: sel.exhausted,
        warnings,
    })
}
