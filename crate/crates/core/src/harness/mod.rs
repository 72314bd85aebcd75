//! Experiment harness: single trials, sample-complexity sweeps, phase
//! curves, convergence traces, lemma suites, and the hardness demo.

pub mod config;
pub mod experiments;
pub mod hardness;
pub mod lemmas;
pub mod output;
pub mod stats;
pub mod trial;

pub use config::{BetaSpec, DeltaRule, ExperimentConfig, ExperimentKind, LemmaConfig, LemmaSuite};
pub use experiments::{
    convergence_trace, phase_transition, run_cell, sample_complexity_sweep, CellRuns, CellSummary, SweepResult,
    SweepRow, TraceResult,
};
pub use hardness::{hardness_crosscheck, hardness_demo, HardnessOutcome};
pub use lemmas::{run_lemma_suites, LemmaReport};
pub use trial::{run_trial, run_trial_detailed, TrialCell, TrialRecord, TrialRun};
