//! Batch experiments: configuration, seeded execution and CSV/JSON reports.

mod config;
mod report;
mod run;

pub use config::*;
pub use report::*;
pub use run::*;
