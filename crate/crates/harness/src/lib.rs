//! Experiment drivers for the mixfield simulator: configuration, Monte Carlo
//! studies and CSV artifacts.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

pub use config::{load_config, parse_config, Direction, ExperimentKind, ExperimentSpec, Overrides};
pub use error::{HarnessError, Result};
pub use experiments::run_experiment;
