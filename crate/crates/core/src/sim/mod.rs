//! Simulation designs, experiment runners and evaluation metrics.

pub mod dgp;
pub mod experiment;
pub mod hill;
pub mod metrics;

pub use dgp::{draw_dgp, DgpCase, DgpSpec, Shift};
pub use experiment::{
    multi_change_spec, rejection_rate, replicate_statistics, run_preset, segmentation_experiment,
    size_power_experiment, write_reports_csv, ExperimentReport, LimitKind, Preset, SegmentationOutcome,
    SegmentationSummary, PROXY_N, REPORT_CSV_HEADER,
};
pub use hill::{hill, hill_columns, HillEstimate};
pub use metrics::{ari, ari_labels, mse_mhat};
