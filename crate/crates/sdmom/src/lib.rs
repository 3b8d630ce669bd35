//! File formats, experiment harness and diagnostics around `sdmom-core`.
//!
//! Datasets are CSV files with an `x1,...,xd` header and an optional
//! key=value sidecar holding the oracle. Experiments and checks are driven by
//! key=value configuration files and write JSON.

pub mod bench;
pub mod check;
pub mod config;
pub mod error;
pub mod io;
pub mod output;

pub use error::{Error, Result};
