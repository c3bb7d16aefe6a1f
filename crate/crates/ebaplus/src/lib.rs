//! Statistical quality assessment for analogy-based software effort
//! estimation datasets.
//!
//! Estimation by analogy predicts a project's effort from its most similar
//! historical projects. That only works when similarity in the describing
//! attributes actually tracks similarity in effort. This crate measures that
//! premise directly: it builds pairwise similarity matrices, correlates them
//! with a row-wise Kendall rank statistic, attaches permutation p-values and
//! bootstrap confidence intervals, and uses those to pick informative
//! attributes and flag abnormal projects before any estimate is made.
//!
//! See the `examples/` directory for a runnable tour; `cargo run --example
//! full_pipeline` is a good starting point.

mod config;
mod error;

pub mod cli;
pub mod dataset;
pub mod estimator;
pub mod kendall;
pub mod metrics;
pub mod pipeline;
pub mod resampling;
pub mod similarity;

pub use config::RunConfig;
pub use error::{Error, Result};
