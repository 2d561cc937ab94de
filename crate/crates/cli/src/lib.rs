//! Library face of the command-line runner, exposed for integration tests
//! and for driving the solver pipeline programmatically.

pub mod classical;
pub mod config;
pub mod runner;

pub use classical::{solve_classical_marching, ClassicalRun};
pub use config::{parse_config_file, parse_config_str, ConfigError, RunConfig, RunMode, U0Family};
pub use runner::{
    execute_audit, execute_limit, execute_run, execute_study, AuditSummary, CliError,
    CommandOptions, LimitSummary, RunSummary, StudyRow, StudySummary,
};
