// SPDX-License-Identifier: MIT OR Apache-2.0

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod cli;
pub mod error;
pub mod estimator;
pub mod evaluation;
pub mod garch;
pub mod quadrature;
pub mod rng;
pub mod simulation;
pub mod transform;
pub mod types;

pub use error::{LaveError, Result};
pub use types::{
    log_returns, sigma_to_theta, theta_to_sigma, PowerParams, ReturnSeries, TransformedSeries, VolEstimate,
};
