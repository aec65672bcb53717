//! Batch orchestration for the rotor annealing model: instance suites,
//! parallel solver campaigns graded against exact oracles, and the
//! histogram, correlation and minima reports built from them.

pub mod commands;
pub mod meta;
pub mod results;

pub use commands::{
    cmd_correlate, cmd_exact, cmd_gen, cmd_minima, cmd_run, cmd_stats, with_threads, GenOptions,
    MinimaCmdOptions, RunOptions, ScheduleSource, Solver,
};
