//! Experiment harness: parameter grids, Monte Carlo drivers for
//! satisfiability sweeps, detector error-rate evaluation, moment checks,
//! and end-to-end validation of the parity-learning reduction, with
//! deterministic seed fan-out and stable CSV/JSON output.

pub mod experiment;
pub mod seed;

pub use experiment::{
    run_detector_eval, run_detector_trials, run_lpn_check, run_moments, run_rows, run_sweep,
    rows_to_csv, Detector, DeltaScale, Experiment, ExperimentConfig, MSpec, MomentsRow, SweepRow,
    TrialRecord, CSV_COLUMNS,
};
