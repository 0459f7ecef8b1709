//! Verification suites, attack driver and report emission for the AME(3,d)
//! bit-commitment simulator. The `qbc` binary is a thin clap front end over
//! [`run_suite`] and [`emit_report`].

pub mod config;
pub mod error;
pub mod report;
pub mod suites;

pub use config::{OutputFormat, RunConfig, Suite};
pub use error::{HarnessError, Result};
pub use report::{emit_report, load_report, Report, SuiteEntry};
pub use suites::run_suite;
