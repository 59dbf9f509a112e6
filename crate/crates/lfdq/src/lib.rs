//! File formats, parallel execution and the command-line front end for
//! [`lfdq_core`].
//!
//! Everything here is plumbing around the core algorithms: JSON and CSV
//! readers and writers for chains, worlds, demonstrations, models, cohorts
//! and study results, a rayon-backed study runner whose output does not
//! depend on scheduling, and the oracle checks behind `lfdq selftest`.

pub mod chain;
pub mod cohort;
pub mod config;
pub mod demo;
mod error;
pub mod json;
pub mod model;
pub mod results;
pub mod runner;
pub mod selftest;
pub mod world;

pub use error::{Error, Result, EXIT_EVALUATION, EXIT_SCHEMA};
pub use lfdq_core as core;

/// Checks that `values` holds exactly `N` numbers.
pub(crate) fn fixed<const N: usize>(values: &[f64], what: &str, path: &std::path::Path) -> Result<[f64; N]> {
    values
        .try_into()
        .map_err(|_| Error::schema(path, format!("{what} has {} entries, expected {N}", values.len())))
}
