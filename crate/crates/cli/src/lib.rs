//! File formats, reports and the command-line front end.

mod commands;
pub mod export;
pub mod format;
pub mod report;

pub use commands::{run, EXIT_INPUT, EXIT_PASS, EXIT_VERDICT};
