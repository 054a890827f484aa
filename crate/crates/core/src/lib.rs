//! Imputation of missing typological features in sparse language knowledge
//! bases, with phylogenetically and geographically controlled evaluation.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`kb`]: parse, filter and serialize tab-separated language datasets.
//! 2. [`split`]: build held-out-genus and random splits and blank test cells.
//! 3. [`impute`]: fit imputers (frequency, back-off chains, kNN, feature
//!    correlation, ridge regression over genetic/areal priors, ensembles).
//! 4. [`eval`]: macro-averaged accuracy, paired permutation tests and the
//!    blanking-ratio and per-feature analyses.

pub mod error;
pub mod eval;
pub mod geo;
pub mod impute;
pub mod kb;
pub mod kv;
pub mod split;

pub use error::{Error, Result};
