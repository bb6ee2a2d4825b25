//! Experiment driver: seeded trial batches, parameter sweeps, summaries and
//! CSV/JSON report emission.

pub mod report;
pub mod run;
pub mod spec;
pub mod sweep;

pub use report::{
    emit_report, load_report, summarize, Format, Reference, Report, Stat, SummaryRow, TrialRecord,
    CSV_COLUMNS,
};
pub use report::{read_csv, write_csv, write_csv_string};
pub use run::{run_experiment, BuiltEnvironment};
pub use spec::{EnvironmentSpec, ExperimentSpec, Mode};
pub use sweep::{grid_points, load_grid, parse_grid, sweep_grid, Grid, SweepReport};
