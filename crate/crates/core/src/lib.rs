//! Penalized generalized linear models along a regularization path, with the
//! tuning parameter chosen by the generalized information criterion
//! `GIC(lambda) = (D(mu_lambda; y) + a_n |support|) / n`.

pub mod cli;
pub mod dataio;
pub mod dataset;
pub mod diagnostics;
pub mod error;
pub mod family;
pub mod path;
pub mod penalty;
pub mod plot;
pub mod simulation;
pub mod solver;

pub use dataset::Dataset;
pub use error::{Error, Result};
pub use family::Family;
pub use penalty::Penalty;
pub use solver::{Fit, Method, SolverOptions};
