//! Experiment harness: quantum Cramér-Rao bound, repeated-trial statistics,
//! frequency sweeps and quantum-versus-classical comparisons.
//!
//! Independent runs execute on the rayon pool; results are collected in
//! input order so reports do not depend on scheduling.

mod advantage;
mod qcrb;
mod report;
mod scenario;
mod sweep;
mod trials;

pub use advantage::{
    run_advantage_experiment, AdvantageReport, AdvantageSetup, Condition, ConditionReport, PipelineResult, REPORT_NOTE,
};
pub use qcrb::{qcrb_delay_std, static_delay_study, QcrbQuery, StaticDelayStudy};
pub use report::{advantage_csv, sweep_csv, trials_csv};
pub use scenario::{Mode, Scenario};
pub use sweep::{run_frequency_sweep, SweepPoint, SweepReport};
pub use trials::{mean_std, run_amplitude_table, run_amplitude_trials, run_trials, TrialOutcome, TrialStatistics};
