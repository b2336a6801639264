//! Experiment harness: synthetic spectra, a matrix-free DFT test operator,
//! method-comparison sweeps, and CSV/JSON reporting.

pub mod dft;
pub mod experiment;
pub mod report;
pub mod spectrum;

pub use dft::{dft_sandwich_operator, DftSandwichOperator};
pub use experiment::{
    run_experiment, run_experiment_parallel, synth_matrix, CellFailure, ExperimentConfig,
    ExperimentRecord, ExperimentRun, MatrixForm, MatrixSpec, Method,
};
pub use report::{build_stamp, emit_report, read_records, ReportPaths, CSV_COLUMNS};
pub use spectrum::{SpectrumKind, SpectrumSpec};
