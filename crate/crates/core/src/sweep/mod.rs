//! Configuration files, parameter sweeps, result tables and
//! model-versus-simulation comparison.

mod compare;
mod config;
mod presets;
mod run;
mod spec;
mod table;

pub use compare::{compare, Deviation, DeviationReport, Tolerance, Tolerances};
pub use config::{parse_config, parse_config_str, Config};
pub use presets::{preset, FIG6_BER, PRESET_NAMES};
pub use run::{run_sweep, run_sweeps, Mode};
pub use spec::{range, SweepParameter, SweepSpec, SweepValue, DEFAULT_HORIZON, DEFAULT_REPLICATIONS, DEFAULT_SEED};
pub use table::{relative_deviation, Metric, MetricCells, Row, RowStatus, Table, SCHEMA_VERSION};
