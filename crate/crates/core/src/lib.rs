//! CUR factorizations by iterative DEIM subselection.
//!
//! The crate is organised bottom-up:
//!
//! - [`matrix`]: dense/CSR storage, Matrix Market I/O, the synthetic
//!   generator and the [`LinearOperator`](matrix::LinearOperator) contract.
//! - [`svd`]: a dense SVD and the Krylov–Schur Lanczos engine [`svd::svds`].
//! - [`select`]: one-round index selection (DEIM, QDEIM, MaxVol, sampling).
//! - [`cur`]: middle matrices, residuals, incremental QR, error metrics.
//! - [`adaptive`]: the multi-round drivers (CADP/DADP, CX/CUR, large scale).
//! - [`verify`]: the seeded acceptance checks, shared by tests and the CLI.

pub mod adaptive;
pub mod cur;
pub mod error;
pub mod linalg;
pub mod matrix;
pub mod rng;
pub mod select;
pub mod svd;
pub mod verify;

pub use error::{CurError, Result};
