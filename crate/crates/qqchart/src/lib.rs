//! Streaming change detection for high-dimensional data panels.
//!
//! The crate monitors many data streams at once. Each stream carries a
//! local statistic (a known-shift CUSUM, an adaptive two-sided CUSUM,
//! or a distribution-free self-starting statistic); each tick, a global
//! statistic collapses the panel of local values into one number that
//! is compared against a calibrated control limit. The primary global
//! statistic measures how far the upper sorted local values sit above
//! their expected in-control quantiles, which keeps detection power for
//! a single changed stream and for many simultaneously changed streams
//! in the same scheme.
//!
//! The pieces, bottom up:
//!
//! - [`local`] and [`nonparametric`]: per-stream statistics.
//! - [`pool`]: steady-state pools that initialize streams from the
//!   long-run state distribution and provide in-control quantiles.
//! - [`global`]: panel-level statistics over the local values.
//! - [`calibrate`]: monitoring schemes, control-limit calibration, and
//!   the parallel run-length simulation harness.
//! - [`stream`]: observation models and change scenarios.
//! - [`config`], [`report`], [`cli`]: the configuration file format,
//!   result tables, and the command-line front end.
//!
//! The `examples/` directory exercises one capability per file and is
//! the suggested entry point; `cargo run --example` any of them.

pub mod calibrate;
pub mod cli;
pub mod config;
pub mod error;
pub mod global;
pub mod local;
pub mod nonparametric;
pub mod order_stats;
pub mod pool;
pub mod reference;
pub mod report;
pub mod rng;
pub mod stream;

pub use calibrate::{
    arl1_table, arl_at, calibrate, calibrate_from_traces, evaluate_cell, simulate_ic_trace,
    simulate_ic_traces, simulate_oc_run, ArlEstimate, CalibrationOutcome, CalibrationSettings,
    CellStats, MonitorScheme, OcRun, RecordMaxTrace, TableCell,
};
pub use error::{Error, Result};
pub use global::{
    logistic_exceedance, logistic_quantile, max_statistic, quantile_exceedance, soft_threshold,
    sum_statistic, GlobalKind,
};
pub use local::{AdaptiveCusumState, AdaptiveParams, CusumParams, CusumState, LocalFamily, LocalState};
pub use nonparametric::{NpParams, NpState};
pub use pool::{PoolConfig, QuantileTable, Snapshot, SteadyStatePool};
pub use stream::{
    build_scenario, DistributionSpec, IcMixture, OcKind, ScenarioConfig, StreamSpec,
};
