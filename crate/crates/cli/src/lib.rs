//! Scenario loading, command dispatch and output writing for the `qhd` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{run_command, Command, RunOptions, RunOutcome};
pub use config::{parse_scenario, LoadedConfig, ScenarioConfig};
pub use error::{CliError, Result};
pub use output::{read_trajectory_csv, write_trajectory, RunManifest, TrajectoryFormat};
