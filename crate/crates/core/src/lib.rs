//! Tuning parameter selection for penalized least squares by variable-selection
//! stability, with the usual information criteria and cross-validation for
//! comparison.
//!
//! The pipeline: load or simulate a [`Dataset`], fit a path of [`PenaltyKind`]
//! estimates with the coordinate descent [`Solver`], pick lambda with a
//! [`Selector`], and refit least squares on the chosen variables.

// `!(x > 0.0)` is used deliberately so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod criteria;
pub mod data;
pub mod error;
pub mod experiments;
pub mod report;
pub mod rng;
pub mod solvers;
pub mod stability;
pub mod tuning;

pub use data::{load_csv, Dataset};
pub use error::{Error, ErrorClass, Result};
pub use solvers::{ActiveSet, FitResult, PenaltyKind, PenaltySpec, Solver};
pub use stability::{estimate_stability, kappa, select_lambda_kappa, StabilityCurve};
pub use tuning::{tune, Selector, TunedModel, TuningSettings};
