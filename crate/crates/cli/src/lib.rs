//! Verification harness around `lorentz-core`: run configurations, suites
//! and report emission for the `lorentz-lab` binary.

pub mod config;
pub mod error;
pub mod report;
pub mod suites;

pub use config::RunConfig;
pub use error::LabError;
pub use report::{emit_report, SuiteReport};
pub use suites::{run_suite, Suite};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "LORENTZ_LAB_OUT";

/// Output directory when neither `--out`, the config nor the environment set one.
pub const DEFAULT_OUT: &str = "lorentz-lab-out";
