//! Named experiments end to end: configuration, simulation, analysis,
//! artifacts and acceptance checks.

pub mod checks;
pub mod config;
pub mod data;
pub mod experiments;
pub mod plot;

pub use checks::{check_report, numerical_oracles, reproduce_all, CheckRow, Summary};
pub use config::{ExperimentConfig, MixedLayout, MixingChoice, EXPERIMENTS};
pub use data::{simulate, Simulation, Streams};
pub use experiments::{experiment_by_name, run_experiment, run_with_simulation, Experiment, ExperimentReport};
