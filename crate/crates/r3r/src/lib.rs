//! Simulation harness for `r3r-core`: run configuration, closed-loop runs,
//! an independent safety oracle, metrics, file formats, SVG export and the
//! command-line interface.

pub mod cli;
pub mod config;
pub mod formats;
pub mod metrics;
pub mod oracle;
pub mod runner;
pub mod svg;
