//! Seeded verification runner: fixtures, suites, reports.

pub mod config;
pub mod report;
pub mod suites;

pub use config::{RunConfig, Suite};
pub use report::{emit, VerificationReport};
pub use suites::run_suites;
