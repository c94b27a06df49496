//! Support library for the `clipcx` command-line tool: deterministic
//! instance generators for the example problems and plain-text/CSV report
//! rendering.

pub mod generators;
pub mod report;
