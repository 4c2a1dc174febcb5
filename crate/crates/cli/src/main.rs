//! `itercur`: generate test matrices, run CUR factorizations, benchmark
//! grids of methods and ranks, and run the acceptance suite.
//!
//! Exit codes: 0 success, 1 failed acceptance criterion, 2 invalid
//! arguments, 3 unreadable input, 4 numerical failure. Failures print a JSON
//! error object on stderr.

mod bench;
mod exec;
mod spec;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use itercur::error::ErrorClass;
use itercur::matrix::{synth_sparse, write_matrix_market, Matrix, SynthParams, DEFAULT_DENSITY};
use itercur::verify::{run, Status, VerifyOptions, CRITERIA};
use itercur::CurError;
use serde_json::json;

use crate::spec::{BackendArg, InputSpec, Method, MethodParams, NormKind, RunSpec};

#[derive(Parser)]
#[command(name = "itercur", version, about = "CUR factorizations by iterative DEIM subselection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic sparse nonnegative matrix in Matrix Market format.
    Generate {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[arg(long, default_value_t = DEFAULT_DENSITY)]
        density: f64,
        /// Number of rank-one terms (defaults to the column count).
        #[arg(long)]
        terms: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Run one method and print a JSON report.
    Decompose(DecomposeArgs),
    /// Run a grid of methods and ranks from a JSON file.
    Benchmark {
        grid: PathBuf,
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        json: PathBuf,
    },
    /// Run the seeded acceptance suite.
    Verify {
        /// Only these criteria (default: all).
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
        /// Multiplier on every tolerance; values <= 0 force failures.
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        tolerance_scale: f64,
        /// Directory with real datasets (overrides ITERCUR_DATA_DIR).
        #[arg(long)]
        data_dir: Option<PathBuf>,
        /// Print a JSON array instead of text lines.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct DecomposeArgs {
    /// Matrix Market input file.
    #[arg(long, conflicts_with_all = ["synth_rows", "synth_cols"])]
    input: Option<PathBuf>,
    #[arg(long, requires = "synth_cols")]
    synth_rows: Option<usize>,
    #[arg(long, requires = "synth_rows")]
    synth_cols: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_DENSITY)]
    synth_density: f64,
    #[arg(long)]
    synth_terms: Option<usize>,
    #[arg(long, value_enum)]
    method: Method,
    #[arg(long, short)]
    k: usize,
    /// Rounds (fixed-count methods and volume sampling).
    #[arg(long)]
    t: Option<usize>,
    /// Indices per round (fixed-count methods and volume sampling).
    #[arg(long)]
    c: Option<usize>,
    /// Decay threshold (dadp-* only).
    #[arg(long)]
    delta: Option<f64>,
    /// Per-round cap (dadp-* only).
    #[arg(long)]
    cap: Option<usize>,
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    #[arg(long, value_enum, default_value_t = NormKind::Both)]
    norm: NormKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    normalize_rows: bool,
    #[arg(long, default_value_t = spec::default_svd_tol())]
    svd_tol: f64,
    /// Write the report here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

impl DecomposeArgs {
    fn spec(&self) -> Result<RunSpec, CurError> {
        let input = match (&self.input, self.synth_rows, self.synth_cols) {
            (Some(path), None, None) => InputSpec::File { path: path.clone() },
            (None, Some(rows), Some(cols)) => InputSpec::Synth {
                rows,
                cols,
                density: self.synth_density,
                terms: self.synth_terms,
                seed: self.seed,
            },
            _ => {
                return Err(CurError::InvalidArgument(
                    "give --input or both --synth-rows and --synth-cols".into(),
                ))
            }
        };
        Ok(RunSpec {
            input,
            method: self.method,
            k: self.k,
            params: MethodParams {
                t: self.t,
                c: self.c,
                delta: self.delta,
                cap: self.cap,
            },
            backend: self.backend,
            norm: self.norm,
            seed: self.seed,
            normalize_rows: self.normalize_rows,
            svd_tol: self.svd_tol,
        })
    }
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Validation => 2,
        ErrorClass::Ingestion => 3,
        ErrorClass::Numerical => 4,
    }
}

fn fail(e: &CurError) -> ExitCode {
    let class = e.class();
    let kind = match class {
        ErrorClass::Validation => "validation",
        ErrorClass::Ingestion => "ingestion",
        ErrorClass::Numerical => "numerical",
    };
    let code = exit_code(class);
    let obj = json!({
        "schema_version": exec::SCHEMA_VERSION,
        "error": { "kind": kind, "code": code, "message": e.to_string() },
    });
    eprintln!("{obj}");
    ExitCode::from(code)
}

fn write_json<T: serde::Serialize>(value: &T, path: Option<&PathBuf>) -> Result<(), CurError> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    match path {
        Some(p) => fs::write(p, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

fn read_grid(path: &PathBuf) -> Result<bench::Grid, CurError> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| CurError::Parse {
        line: e.line(),
        message: e.to_string(),
    })
}

fn run_command(cmd: Command) -> Result<ExitCode, CurError> {
    match cmd {
        Command::Generate {
            rows,
            cols,
            density,
            terms,
            seed,
            output,
        } => {
            let mut p = SynthParams::new(rows, cols, density, seed);
            p.terms = terms;
            let a = Matrix::Sparse(synth_sparse(&p)?);
            write_matrix_market(&a, &output)?;
            let summary = json!({
                "schema_version": "itercur.generate/1",
                "path": output,
                "rows": rows,
                "cols": cols,
                "density": density,
                "nnz": a.nnz(),
                "seed": seed,
            });
            println!("{summary}");
        }
        Command::Decompose(args) => {
            let spec = args.spec()?;
            spec.resolve()?;
            let a = exec::load_input(&spec.input, spec.normalize_rows)?;
            let norms = if spec.norm.spectral() {
                Some(exec::input_norms(&spec.input, spec.normalize_rows, &a)?)
            } else {
                None
            };
            let report = exec::execute(&spec, &a, norms)?;
            write_json(&report, args.output.as_ref())?;
        }
        Command::Benchmark { grid, csv, json } => {
            let report = bench::run_grid(read_grid(&grid)?)?;
            bench::write_csv(&report.cells, &csv)?;
            write_json(&report, Some(&json))?;
            let failed = report.cells.iter().filter(|c| c.error.is_some()).count();
            eprintln!("{} cells, {failed} failed", report.cells.len());
        }
        Command::Verify {
            only,
            tolerance_scale,
            data_dir,
            json,
        } => {
            let mut opts = VerifyOptions {
                tolerance_scale,
                ..VerifyOptions::default()
            };
            if data_dir.is_some() {
                opts.data_dir = data_dir;
            }
            let ids: Vec<usize> = if only.is_empty() {
                CRITERIA.iter().map(|&(id, _)| id).collect()
            } else {
                only
            };
            let mut reports = Vec::new();
            for id in ids {
                let r = run(id, &opts);
                if !json {
                    println!("{}", r.line());
                }
                reports.push(r);
            }
            if json {
                write_json(&reports, None)?;
            }
            if reports.iter().any(|r| r.status == Status::Fail) {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run_command(cli.command) {
        Ok(code) => code,
        Err(e) => fail(&e),
    }
}
