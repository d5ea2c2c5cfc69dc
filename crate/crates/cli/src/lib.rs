//! Scenario files, run orchestration and artifacts for `secfreq-core`.

pub mod error;
pub mod format;
pub mod output;
pub mod run;
pub mod sweep;

pub use error::{CliError, Result};
pub use format::{load_scenario, parse_scenario, serialize_scenario};
pub use output::{emit_plots, to_csv, write_csv};
pub use run::{run, simulate, CertStatus, RunFlags, RunOutput, RunReport};
pub use sweep::{set_param, sweep};
