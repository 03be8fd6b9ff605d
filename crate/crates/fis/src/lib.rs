//! File formats, configuration and experiment drivers for the `fis` CLI.

pub mod config;
pub mod experiments;
pub mod lsq;
pub mod manifest;
pub mod report;
