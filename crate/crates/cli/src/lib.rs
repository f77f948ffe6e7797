//! Command-line front end: CSV ingestion, reports and the simulation
//! experiment harness.

pub mod commands;
pub mod experiments;
pub mod io;
pub mod report;

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "FERMAT_FDA_THREADS";
