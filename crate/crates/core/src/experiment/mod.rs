//! Randomized experiments against a simulated ad tracker.

mod config;
mod power;
mod run;
mod tracker;

pub use config::{ExperimentConfig, TreatmentSpec, CAR_KEYWORDS};
pub use power::{cross_unit_probe, p_value, power_eval, run_seed, DiversityReport, PowerReport, RoundRow, StatChoice};
pub use run::{assign_treatments, run_experiment, Action, Assignment, ExperimentRun, ReloadLog, RunStatus, UnitLog};
pub use tracker::{AdSpec, PoolSpec, Targeting, Tracker, TrackerSpec};
