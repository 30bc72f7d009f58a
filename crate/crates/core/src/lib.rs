//! Conformal calibration for forecasters that emit predictive draws.
//!
//! Each forecast is a vector of samples from the model's predictive
//! distribution. A nonconformity score compares a candidate target with
//! those draws; calibration scores give a threshold `qhat`, and the
//! prediction interval is the set of targets scoring at most `qhat`, found
//! numerically (any score) or in closed form (residual, Z and interval
//! scores). Intervals are judged with coverage, width and a Winkler score
//! whose miss term is inflated when coverage falls short.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bands;
pub mod calibrate;
pub mod config;
pub mod draws;
pub mod error;
pub mod metrics;
pub mod oracles;
pub mod pipeline;
pub mod rootfind;
pub mod scenario;
pub mod scores;
pub mod synth;

pub use bands::{hdi_band, quantile_band, BaseBand};
pub use calibrate::{conformal_rank, threshold, window_init, window_update, CalibrationWindow};
pub use config::{Config, ScoreFamily, ScoreSpec};
pub use draws::{summarize_draws, DrawVector};
pub use error::{DcpError, Result};
pub use metrics::{evaluate, mmw, EvaluationReport, MetricParams, SampleEval};
pub use pipeline::{run, DrawRecord, Inversion, IntervalRow, RunOutput};
pub use rootfind::{
    analytic_interval, bisect, build_grid, conformal_interval, find_interval, IntervalStatus,
    PredictionInterval, RootFindConfig,
};
pub use scores::{make_score_fn, ScoreFn};
