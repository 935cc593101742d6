//! Experiment harness: generators, seeded replications, invariant suites.

pub mod config;
pub mod experiment;
pub mod generators;
pub mod stats;
pub mod verify;

pub use experiment::{
    parse_seeds, run_experiment, write_outputs, ExperimentConfig, ExperimentOutput,
    ExperimentRecord, LearnerKind, Mode, RunTotals, Summary,
};
pub use generators::{generate_buyers, generate_losses, LossSpec, PatienceDist, ValueDist};
pub use stats::{fit_exponent, mean_stderr, MeanStderr};
pub use verify::{verify_invariants, InvariantCheck, VerifyReport, VerifyScope};
