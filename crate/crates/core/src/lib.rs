//! Benchmarking toolkit for biomarker-discovery feature selection on
//! two-class expression data.
//!
//! Three filter selection methods (SAM, mRMR, GeoDE) and four classifiers
//! (random forest, linear SVM, ridge and lasso logistic regression) are
//! evaluated under leave-one-out cross-validation; methods are compared by
//! selection stability (StabPerf) and prediction accuracy (AUC), with
//! Tukey HSD significance tests over the resulting profiles.

pub mod classify;
pub mod data;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod seed;
pub mod select;
pub mod stats;

pub use error::{Error, Result};
