//! Experiment driver for the IRS secrecy-outage model: configuration
//! files, the five experiment kinds, and CSV/JSON output with a metadata
//! sidecar.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

use std::path::PathBuf;

pub use config::{emit_config, load_config, parse_config, ExperimentKind, ExperimentSpec, OutputFormat};
pub use error::{CliError, CliResult};

use experiments::ExperimentRegistry;
use output::{write_sidecar, write_table, Table};

/// Files written by [`execute`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub table: Table,
    pub result_path: PathBuf,
    pub sidecar_path: PathBuf,
}

/// Default result file when neither the command line nor the config names one.
pub fn default_out(spec: &ExperimentSpec) -> PathBuf {
    PathBuf::from(format!("{}.{}", spec.kind.as_str(), spec.format.as_str()))
}

/// Runs `spec` and writes the result table plus its sidecar.
pub fn execute(spec: &ExperimentSpec) -> CliResult<RunOutput> {
    spec.validate()?;
    let registry = ExperimentRegistry::default();
    let experiment = registry
        .get(spec.kind)
        .ok_or_else(|| CliError::Config(format!("no experiment registered for `{}`", spec.kind.as_str())))?;
    let table = experiment.run(spec)?;
    let result_path = spec.out.clone().unwrap_or_else(|| default_out(spec));
    write_table(&table, &result_path, spec.format)?;
    let sidecar_path = write_sidecar(spec, &result_path)?;
    Ok(RunOutput { table, result_path, sidecar_path })
}
