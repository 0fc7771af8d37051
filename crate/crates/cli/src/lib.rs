//! Library surface of the command-line tool, kept separate from the binary
//! so integration tests can drive the same code paths.

pub mod config;
pub mod run;
pub mod sweep;

pub use config::{load_run_config, load_sweep_config, ConfigError, RunConfig, SweepConfig};
pub use run::{execute, simulate, RunError, RunOutcome};
pub use sweep::{run_sweep, sweep};
