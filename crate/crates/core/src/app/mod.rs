//! Command-line shell: configuration, runs and file formats.

pub mod config;
pub mod io;
pub mod mesh;
pub mod runs;
pub mod validate;

pub use config::{InitialSpine, RunConfig};
pub use io::{Checkpoint, GeometryFile, Provenance};
pub use runs::{run_export, run_multistart, run_optimize, run_resume, run_scan, RunOutcome, ScanRow};
pub use validate::{run_validate, ValidationReport};
