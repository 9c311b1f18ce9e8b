//! Forecasting toolkit for monthly carbon-market data.
//!
//! The crate covers the full chain from raw monthly series to scored forecasts:
//!
//! * [`timeseries`]: calendar-month containers, transforms, panel alignment.
//! * [`disagg`]: Chow-Lin temporal disaggregation of annual totals.
//! * [`factors`]: principal-component factors and their diagnostics.
//! * [`models`]: random walks, ARIMA, conjugate BAR/BVAR and BVAR with
//!   Cholesky stochastic volatility.
//! * [`forecast`]: iterated point forecasts, level conversion, predictive
//!   simulation and quantile grids.
//! * [`backtest`]: expanding-window out-of-sample harness.
//! * [`eval`]: RMSFE, success ratio, quantile-weighted CRPS, DM, PT and
//!   fluctuation tests.
//! * [`monitor`]: demand and price pressure indices.
//! * [`synth`]: synthetic data bundles with a known data-generating process.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod backtest;
pub mod disagg;
mod error;
pub mod eval;
pub mod factors;
pub mod forecast;
pub mod io;
pub mod linalg;
pub mod models;
pub mod monitor;
pub mod rng;
pub mod stats;
pub mod synth;
pub mod timeseries;

pub use error::{Error, ErrorKind, Result};
pub use timeseries::{MonthDate, MonthlySeries, PredictorClass, PredictorPanel, Transform};
