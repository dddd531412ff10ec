//! Command-line pipeline: load a run config, plan with and without the
//! interaction wrench, simulate, and write the artifacts.

mod config;
mod pipeline;

pub use config::{GridConfig, RunConfig, SimulationConfig, WrenchSource};
pub use pipeline::{
    error_exit_code, run, Comparison, Mode, PlanResult, RunOptions, RunSummary, ENVELOPE_TOL,
};
