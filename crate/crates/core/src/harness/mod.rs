//! Configuration, initial data, experiment orchestration and output files.

mod config;
mod experiment;
mod initial;
mod output;

use std::path::PathBuf;

use thiserror::Error;

use crate::driver::RunFailure;
use crate::error::QhdError;

pub use config::{
    apply_override, parse_override_args, BumpConfig, ConfigError, ConfigErrorCode, DiagnosticsConfig, DopingConfig,
    ForcingConfig, GridConfig, OutputConfig, PhysicsConfig, RunConfig, RunSection, SnapshotConfig, TimeConfig,
    ENV_OUTPUT_ROOT, ENV_THREADS,
};
pub use experiment::{
    fit_order, relaxation_sweep, run_experiment, tau_convergence_study, Diagnostic, Experiment, RelaxationStudy,
    RunManifest, Status, StripSummary, TauStudy, Timings, DENSITY_JUMP_LIMIT, ENERGY_EQUIVALENCE_LIMIT,
    MASS_DRIFT_LIMIT,
};
pub use initial::{build_initial_condition, InitialData, InitialSpec, Profile, Shape};
pub use output::{
    decode_field_dump, export_outputs, export_plot_data, read_field_dump, read_manifest, verify_dumps,
    write_field_dump, DumpCheck, ExportOptions, VerifyReport, FIELDS_DIR, MANIFEST_FILE, PLOTS_DIR, SUBSTEPS_FILE,
    TIMESERIES_FILE,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Run(#[from] Box<RunFailure>),

    #[error(transparent)]
    Core(#[from] QhdError),

    #[error("refusing to overwrite non-empty output directory {0} (set output.overwrite)")]
    OutputExists(PathBuf),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad run directory: {0}")]
    Manifest(String),
}

impl From<RunFailure> for HarnessError {
    fn from(f: RunFailure) -> Self {
        HarnessError::Run(Box::new(f))
    }
}

impl HarnessError {
    /// Process exit status: 2 for configuration errors, 3 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            _ => 3,
        }
    }
}
