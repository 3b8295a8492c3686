//! Robust self-normalized change-point tests and seeded binary segmentation
//! for high-dimensional time series.
//!
//! The main entry points are [`sn_statistic`] for a single-change test on
//! one window, [`simulate_limit`] for the fixed-`n` null tables, and
//! [`segment`] for multiple change points.

pub mod data;
pub mod error;
pub mod family;
pub mod limit;
pub mod rng;
pub mod seeded;
pub mod segment;
pub mod sign_kernel;
pub mod sim;
pub mod sn_test;

pub use data::{load_csv, read_csv, save_csv, transpose_guard, write_csv, DataMatrix, SegmentTriple, ShapeWarning};
pub use error::{Error, Result};
pub use limit::{
    delta_shift, g_process, limit_functional, load_table, p_value, q_process, read_table, save_table,
    simulate_limit, write_table, LimitDraw, NoncentralSpec, QuantileTable, TableCache, TableSource,
};
pub use rng::RandomStream;
pub use seeded::{generate, SeededInterval, SeededIntervalSet};
pub use segment::{segment, tie_and_dedup_policy, ChangePointResult, Detection, SegmenterConfig};
pub use sign_kernel::{d_mean, d_mean_oracle, d_sign_fast, d_sign_oracle, spatial_sign, DValue, PairwiseSignCache, StatKind};
pub use sn_test::{sn_statistic, SnStatResult, StatEngine, MIN_WINDOW};
