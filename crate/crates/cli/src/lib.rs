//! Scenario files, result tables and the subcommands behind the `ccn-agg`
//! binary.

pub mod commands;
pub mod error;
pub mod scenario;
pub mod table;

pub use commands::{cmd_analyze, cmd_compare, cmd_simulate, cmd_sweep, notes, RunOptions};
pub use error::CliError;
pub use scenario::{load_scenario, CacheAllocation, ScenarioFile, SimSection, Sweep, SweepParameter};
pub use table::{OutputFormat, ResultRow, ResultTable};
