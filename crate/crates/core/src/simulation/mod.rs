//! Monte Carlo experiments: data-generating processes, experiment configs,
//! seeded runners and distances to the normal reference.

pub mod config;
pub mod dgp;
pub mod distances;
pub mod experiments;

pub use config::{CellSpec, DiagnosticsConfig, ExperimentConfig, PowerConfig, ShiftKind, SizeConfig};
pub use dgp::{DgpSpec, Innovation, MeanShift, PreparedDgp, Role, VDiag, VarShift};
pub use experiments::{
    empirical_critical_value, null_distribution_diagnostics, run_experiment, run_power_curve, run_size_experiment,
    DiagnosticsResult, ExperimentReport, ExperimentResults, PowerCellResult, SizeCellResult, Tally,
};
