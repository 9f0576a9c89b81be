//! Scenario files, the validate / plan / mc-compare run modes and their
//! artifacts.

mod artifacts;
mod report;
mod run;
mod schema;

pub use artifacts::*;
pub use report::*;
pub use run::{channel_deviations, run_mc_compare, run_plan, run_validate, RunOutput, DEVIATION_THRESHOLD, MIN_MC_RUNS};
pub use schema::*;
