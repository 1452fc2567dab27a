//! Automated machine-learning analysis pipeline for tabular binary
//! classification data.
//!
//! The crate is organised by pipeline stage:
//!
//! - [`data`]: tabular data model, CSV ingestion, type inference, label encoding
//! - [`eda`]: summary statistics, correlations, univariate association tests
//! - [`processing`]: cleaning and feature engineering with an audit ledger
//! - [`partition`]: k-fold cross-validation partitioning
//! - [`transform`]: train-only imputation and scaling
//! - [`importance`]: mutual information, MultiSURF, TuRF, collective selection
//! - [`models`]: classifier suite, random hyperparameter search, permutation importance
//! - [`metrics`]: the evaluation metric suite, curves, composite feature importance
//! - [`stats`]: nonparametric tests and algorithm/dataset comparisons
//! - [`replication`]: preparing and evaluating hold-out replication data
//! - [`simgen`]: benchmark dataset simulators
//! - [`pipeline`]: experiment orchestration, persistence and reporting

pub mod data;
pub mod eda;
pub mod error;
pub mod importance;
pub mod metrics;
pub mod models;
pub mod partition;
pub mod pipeline;
pub mod processing;
pub mod replication;
pub mod simgen;
pub mod stats;
pub mod transform;

pub use error::{Error, Result};
