//! Configuration files and report emission.

pub mod config;
pub mod report;

pub use config::{parse_config, OutputConfig, RunConfig};
pub use report::{emit_report, write_manifest, Format};
