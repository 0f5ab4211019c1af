// SPDX-License-Identifier: MIT OR Apache-2.0

use thiserror::Error;

pub type Result<T> = std::result::Result<T, LaveError>;

/// Errors raised by the estimation, calibration and benchmark routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LaveError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("size error: {0}")]
    Size(String),

    /// Every observation in the window is zero, so the local mean and its
    /// estimated deviation are both zero and the test statistic is 0/0.
    #[error("degenerate window [{lo}, {hi}): all transformed observations are zero")]
    DegenerateWindow { lo: usize, hi: usize },

    #[error("insufficient data: need at least {needed} observations, have {available}")]
    InsufficientData { needed: usize, available: usize },

    #[error("divergence: {0}")]
    Divergence(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("calibration target {target} not bracketed by lambda in [{lo}, {hi}] (rates {rate_lo}, {rate_hi})")]
    Bracket {
        target: f64,
        lo: f64,
        hi: f64,
        rate_lo: f64,
        rate_hi: f64,
    },

    /// The optimizer hit its iteration budget. `best` holds the best parameter
    /// vector found so far in the caller's natural parameterization.
    #[error("optimizer did not converge after {iterations} iterations")]
    Convergence { iterations: usize, best: Vec<f64> },

    #[error("numeric error: {0}")]
    Numeric(String),
}

impl LaveError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        LaveError::Domain(msg.into())
    }

    pub(crate) fn size(msg: impl Into<String>) -> Self {
        LaveError::Size(msg.into())
    }

    /// Short machine-readable tag for the error family.
    pub fn kind(&self) -> &'static str {
        match self {
            LaveError::Domain(_) => "domain",
            LaveError::Size(_) => "size",
            LaveError::DegenerateWindow { .. } => "degenerate_window",
            LaveError::InsufficientData { .. } => "insufficient_data",
            LaveError::Divergence(_) => "divergence",
            LaveError::Unsupported(_) => "unsupported",
            LaveError::Bracket { .. } => "bracket",
            LaveError::Convergence { .. } => "convergence",
            LaveError::Numeric(_) => "numeric",
        }
    }
}
