//! Experiment runner for the Hartree laboratory: configuration files, orbit
//! distances, and one orchestrated experiment per subcommand with CSV and SVG
//! output.

pub mod config;
pub mod error;
pub mod experiments;
pub mod orbit;
pub mod plot;

pub use config::{ExperimentConfig, KeySpec};
pub use error::{FailureKind, LabError, LabResult};
pub use experiments::{run, Report};
pub use orbit::{orbit_distance, OrbitDistanceResult};
