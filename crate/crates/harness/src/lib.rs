//! Seeded Monte Carlo runner for the ensemble protocols: trial execution,
//! sweeps over detector parameters, statistics and JSON/CSV output.

pub mod error;
pub mod experiment;
pub mod output;
pub mod runner;
pub mod self_check;

pub use error::{HarnessError, Result};
pub use experiment::{ExperimentSpec, Protocol};
pub use runner::{
    run_sweep, run_trials, run_trials_with, Execution, Grid, Sweep, SweepParameter, TrialStats,
};
