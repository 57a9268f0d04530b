//! Experiment runner: spec parsing, sweep evaluation and CSV output.

pub mod experiment;
pub mod output;
pub mod presets;
pub mod spec;

pub use experiment::{params_at, run_experiment, ExperimentOutput, ResultRow, RowFailure};
pub use output::{emit, format_g12, read_csv, write_csv};
pub use spec::{parse_spec, ExperimentKind, ExperimentSpec, Scheme, SpecError, SpecErrors, SweepVar};
