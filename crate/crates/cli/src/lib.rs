//! Command-line front end for the subsidy solvers: instance generation,
//! solving, verification, and side-by-side comparison against the
//! brute-force oracles. Reports come out both human-readable and as JSON.

pub mod commands;
pub mod error;
pub mod format;
pub mod gen;
pub mod report;

pub use error::CliError;
