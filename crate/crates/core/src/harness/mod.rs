//! Configs, run/sweep artifacts, property checks and exit codes.

pub mod checks;
pub mod config;
pub mod run;

pub use checks::{run_checks, run_checks_with, CheckDeps, CheckReport};
pub use config::{parse_override, ExperimentConfig};
pub use run::{
    cmd_run, cmd_sweep, output_root, resolve, run_seed, summarize, summary_from_dir, SweepAxis,
    OUTPUT_ROOT_ENV,
};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_DIVERGED: i32 = 4;
pub const EXIT_CHECK: i32 = 5;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) | Error::Idx(_) => EXIT_IO,
        Error::Diverged { .. } | Error::NonConvergence { .. } => EXIT_DIVERGED,
        _ => EXIT_CONFIG,
    }
}
