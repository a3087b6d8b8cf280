//! Command-line front end for the `shockwave` library.
//!
//! Subcommands read `time_s,accel_ms2` CSV records and write plain CSV, JSON
//! and text reports into an output directory. Exit codes for `decompose`:
//! 0 when the residual tolerance is met, 2 when the component cap is hit,
//! 3 when a fit fails, 1 on any error.

pub mod commands;
pub mod config;
pub mod io;
pub mod report;

pub use commands::{run, Cli};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_MAX_COMPONENTS: i32 = 2;
pub const EXIT_FIT_FAILED: i32 = 3;
