//! Synthetic benchmarks, repeated-run experiments and their metrics.

pub mod curves;
pub mod experiment;
pub mod objectives;
pub mod report;
pub mod stats;
pub mod trace;

pub use curves::AggregateCurves;
pub use experiment::{run_experiment, ExperimentFailure, ExperimentResult, ExperimentSpec, StrategyEntry};
pub use objectives::{SyntheticKind, SyntheticObjective};
pub use stats::{compute_ci, ConfidenceInterval};
pub use trace::{RunTrace, TraceRow};
