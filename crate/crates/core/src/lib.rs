//! Two-stage factor modelling of high-dimensional nonstationary time series:
//! unit-root common trends, stationary common factors, white-noise counting,
//! forecasting and simulation.

pub mod config;
pub mod error;
pub mod forecast;
pub mod pipeline;
pub mod simgen;
pub mod stationary;
pub mod tsstats;
pub mod unitroot;
pub mod whitenoise;

pub use config::{PipelineConfig, R1Params};
pub use error::{Error, Result};
pub use pipeline::{decompose, Decomposition};
pub use tsstats::TimeSeriesPanel;
