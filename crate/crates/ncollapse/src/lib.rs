//! Standard-library companion to `ncollapse-core`: embedding file formats,
//! JSON reports, rayon-backed drivers and the `ncollapse` command line.

pub mod cli;
pub mod format;
pub mod parallel;
pub mod report;

pub use ncollapse_core;
