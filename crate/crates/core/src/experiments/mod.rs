//! Named numerical experiments: configs, presets and runners.
//!
//! A run is described by an [`ExperimentConfig`], usually read from TOML,
//! and executed by [`run_experiment`]. Raw per-site data is always kept;
//! cell sums are an extra view.

mod config;
mod export;
mod presets;
mod profile;
mod run;

pub use config::{
    center_site, AnalysisConfig, CoinedPreset, ExperimentConfig, ExperimentKind, InitConfig, InitTerm, NoiseConfig,
    OpConfig, OpOrder, OutputConfig, ProgramConfig,
};
pub use export::{fmt_f64, report_csv, CsvFile};
pub use presets::{preset, PRESET_NAMES};
pub use profile::{angle_at, AngleProfile};
pub use run::{
    cell_sums, prepare, return_report, run_experiment, CellProbability, DephasingRun, EdgeReport, ExperimentReport,
    GateReport, ReturnReport, SidePhase, RETURN_TOLERANCE,
};
