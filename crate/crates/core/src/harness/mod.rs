//! Reproducible experiment driver: end-to-end runs, Monte Carlo sweeps and
//! the built-in validation suite.

mod experiment;
mod sweep;
pub mod table;
#[cfg(any(test, feature = "oracle"))]
mod validate;

pub use experiment::{
    receiver_rows, run_experiment, run_experiment_with_bulletin, simulate_tallies,
    ExperimentResult, ExperimentRow, RunMetadata,
};
pub use sweep::{run_sweep, summarize_sweep, SweepAxis, SweepRow, SweepSpec, SweepSummary};
#[cfg(any(test, feature = "oracle"))]
pub use validate::{validate, validate_with, Check, ValidationOptions, ValidationReport};
