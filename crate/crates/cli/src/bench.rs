use std::path::Path;
use std::time::Instant;

use itercur::{CurError, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::exec::{execute, input_norms, load_input, RunReport};
use crate::spec::{default_svd_tol, BackendArg, InputSpec, Method, MethodParams, NormKind, RunSpec};

pub const GRID_SCHEMA_VERSION: &str = "itercur.benchmark/1";

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "ITERCUR_THREADS";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodEntry {
    pub method: Method,
    #[serde(flatten)]
    pub params: MethodParams,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub input: InputSpec,
    pub methods: Vec<MethodEntry>,
    pub ranks: Vec<usize>,
    /// Applied to methods that use an SVD backend.
    #[serde(default)]
    pub backend: Option<BackendArg>,
    #[serde(default)]
    pub norm: NormKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub normalize_rows: bool,
    #[serde(default = "default_svd_tol")]
    pub svd_tol: f64,
}

impl Grid {
    pub fn cells(&self) -> Vec<RunSpec> {
        let mut cells: Vec<RunSpec> = self
            .methods
            .iter()
            .flat_map(|m| {
                self.ranks.iter().map(move |&k| RunSpec {
                    input: self.input.clone(),
                    method: m.method,
                    k,
                    params: m.params.clone(),
                    backend: self.backend.filter(|_| m.method.takes_backend()),
                    norm: self.norm,
                    seed: self.seed,
                    normalize_rows: self.normalize_rows,
                    svd_tol: self.svd_tol,
                })
            })
            .collect();
        cells.sort_by(|a, b| {
            (a.method, a.k, a.param_string()).cmp(&(b.method, b.k, b.param_string()))
        });
        cells
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Cell {
    pub method: Method,
    pub k: usize,
    pub params: String,
    pub report: Option<RunReport>,
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct BenchmarkReport {
    pub schema_version: &'static str,
    pub grid: Grid,
    pub seconds: f64,
    pub cells: Vec<Cell>,
}

/// One CSV row per cell; failed cells carry the message in `error`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub method: String,
    pub k: usize,
    pub params: String,
    pub rel_err_2: Option<f64>,
    #[serde(rename = "rel_err_F")]
    pub rel_err_f: Option<f64>,
    pub seconds: Option<f64>,
    pub matvecs: Option<usize>,
    pub error: Option<String>,
}

impl From<&Cell> for CsvRow {
    fn from(c: &Cell) -> Self {
        let r = c.report.as_ref();
        CsvRow {
            method: c.method.name().into(),
            k: c.k,
            params: c.params.clone(),
            rel_err_2: r.and_then(|r| r.spectral_error).map(|e| e.relative),
            rel_err_f: r.and_then(|r| r.frobenius_error).map(|e| e.relative),
            seconds: r.map(|r| r.seconds),
            matvecs: r.map(|r| r.matvecs),
            error: c.error.clone(),
        }
    }
}

pub fn thread_count() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| CurError::InvalidArgument(format!("{THREADS_ENV}={v} is not a positive integer"))),
    }
}

pub fn run_grid(grid: Grid) -> Result<BenchmarkReport> {
    if grid.methods.is_empty() || grid.ranks.is_empty() {
        return Err(CurError::InvalidArgument("grid needs at least one method and one rank".into()));
    }
    let start = Instant::now();
    let a = load_input(&grid.input, grid.normalize_rows)?;
    let norms = if grid.norm.spectral() {
        Some(input_norms(&grid.input, grid.normalize_rows, &a)?)
    } else {
        None
    };
    let specs = grid.cells();
    let run_all = || -> Vec<Cell> {
        specs
            .par_iter()
            .map(|spec| {
                let (report, error) = match execute(spec, &a, norms) {
                    Ok(r) => (Some(r), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                Cell {
                    method: spec.method,
                    k: spec.k,
                    params: spec.param_string(),
                    report,
                    error,
                }
            })
            .collect()
    };
    let cells = match thread_count()? {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CurError::InvalidArgument(e.to_string()))?
            .install(run_all),
        None => run_all(),
    };
    Ok(BenchmarkReport {
        schema_version: GRID_SCHEMA_VERSION,
        grid,
        seconds: start.elapsed().as_secs_f64(),
        cells,
    })
}

pub fn write_csv(cells: &[Cell], path: &Path) -> Result<()> {
    let to_io = |e: csv::Error| CurError::Io(e.into());
    let mut w = csv::Writer::from_path(path).map_err(to_io)?;
    for c in cells {
        w.serialize(CsvRow::from(c)).map_err(to_io)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let to_io = |e: csv::Error| CurError::Io(e.into());
    let mut r = csv::Reader::from_path(path).map_err(to_io)?;
    r.deserialize().map(|row| row.map_err(to_io)).collect()
}
