//! Workbench CLI internals: configuration parsing, experiment orchestration
//! and the CSV/SVG emitters, kept as a library so the integration and
//! acceptance suites can drive them directly.

pub mod config;
pub mod csvio;
pub mod run;
pub mod svg;
