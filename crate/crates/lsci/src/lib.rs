//! Locally adaptive, distribution-free prediction sets for function-valued
//! regression residuals.
//!
//! Given a black-box predictor between function spaces, this crate scores
//! how central a candidate residual is under a *localized* weighted
//! empirical law of the calibration residuals, using the infimum of
//! univariate depths over a family of linear projections. Thresholding
//! those depth scores yields a prediction set with approximate marginal
//! coverage; a rejection sampler turns the implicit set into an ensemble
//! and a pointwise band.
//!
//! The pipeline for one test input:
//!
//! 1. perturb the test input into a knock-off ([`localize::knockoff`]),
//! 2. weight the calibration set around it ([`localize::local_weights`]),
//! 3. build a projection family ([`projections`]) and per-projection
//!    weighted measures ([`conformal::build_measures`]),
//! 4. score calibration residuals by projection-infimum depth and pick the
//!    threshold ([`conformal::calibrate`]),
//! 5. sample the set and reduce to a band ([`sampler`]).
//!
//! Synthetic generators, split-conformal baselines, and a replicate
//! benchmark harness live in [`datagen`] and [`eval`]; the `lsci` binary
//! drives everything from the command line.

pub mod basemodel;
pub mod cli;
pub mod config;
pub mod conformal;
pub mod datagen;
pub mod depth;
pub mod error;
pub mod eval;
pub mod function;
pub mod grid;
pub mod io;
pub mod localize;
pub mod projections;
pub mod sampler;
pub mod seeding;

pub use config::RunConfig;
pub use error::{LsciError, Result};
pub use function::{FunctionSample, FunctionSet};
pub use grid::{Grid, GridKind, SharedGrid};
