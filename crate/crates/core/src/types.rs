// SPDX-License-Identifier: MIT OR Apache-2.0

//! Return series, transformed series and the Gaussian power constants.

use crate::error::{LaveError, Result};

/// Log-returns `R_t`, indexed by ordinal position only.
///
/// Zero returns are kept; they are the usual encoding of a missing quote.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    values: Vec<f64>,
    label: Option<String>,
}

impl ReturnSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(LaveError::domain(format!("non-finite return at index {i}")));
        }
        Ok(Self { values, label: None })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Series made of the first `n` returns.
    pub fn prefix(&self, n: usize) -> ReturnSeries {
        ReturnSeries {
            values: self.values[..n.min(self.values.len())].to_vec(),
            label: self.label.clone(),
        }
    }

    /// Multiplies every return by `c`.
    pub fn scaled(&self, c: f64) -> ReturnSeries {
        ReturnSeries {
            values: self.values.iter().map(|r| c * r).collect(),
            label: self.label.clone(),
        }
    }
}

/// `Y_t = |R_t|^gamma` together with running sums for O(1) window means.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedSeries {
    values: Vec<f64>,
    gamma: f64,
    // cumulative[i] = Y_0 + ... + Y_{i-1}
    cumulative: Vec<f64>,
    // nonzero[i] = number of nonzero Y among the first i entries
    nonzero: Vec<usize>,
}

impl TransformedSeries {
    /// Wraps already-transformed values. All entries must be finite and `>= 0`.
    pub fn from_values(values: Vec<f64>, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(LaveError::domain(format!("gamma must be positive, got {gamma}")));
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(LaveError::domain(format!(
                "transformed value at index {i} is negative or non-finite"
            )));
        }
        let mut cumulative = Vec::with_capacity(values.len() + 1);
        let mut nonzero = Vec::with_capacity(values.len() + 1);
        let (mut acc, mut nz) = (0.0, 0usize);
        cumulative.push(acc);
        nonzero.push(nz);
        for &v in &values {
            acc += v;
            if v > 0.0 {
                nz += 1;
            }
            cumulative.push(acc);
            nonzero.push(nz);
        }
        Ok(Self {
            values,
            gamma,
            cumulative,
            nonzero,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sum over the half-open index range `[lo, hi)`.
    pub(crate) fn window_sum(&self, lo: usize, hi: usize) -> f64 {
        self.cumulative[hi] - self.cumulative[lo]
    }

    pub(crate) fn window_has_mass(&self, lo: usize, hi: usize) -> bool {
        self.nonzero[hi] > self.nonzero[lo]
    }
}

/// Power exponent with the Gaussian constants it induces.
///
/// `c_gamma = E|xi|^gamma`, `d_gamma^2 = Var|xi|^gamma`, `s_gamma = d/c`.
/// `a_gamma` is the sub-Gaussian constant of the normalized noise; it is only
/// defined for `gamma <= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerParams {
    pub gamma: f64,
    pub c_gamma: f64,
    pub d_gamma: f64,
    pub s_gamma: f64,
    pub a_gamma: Option<f64>,
}

impl PowerParams {
    pub fn theta_to_sigma(&self, theta: f64) -> Result<f64> {
        theta_to_sigma(theta, self)
    }

    pub fn sigma_to_theta(&self, sigma: f64) -> Result<f64> {
        sigma_to_theta(sigma, self)
    }
}

/// Point estimate produced by the adaptive procedure at one time point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolEstimate {
    pub theta_hat: f64,
    pub sigma_hat: f64,
    pub interval_len: usize,
    pub v_tilde: f64,
}

/// `log(S_{t+1} / S_t)` for consecutive prices.
pub fn log_returns(prices: &[f64]) -> Result<ReturnSeries> {
    if prices.len() < 2 {
        return Err(LaveError::size(format!("need at least 2 prices, got {}", prices.len())));
    }
    if let Some(i) = prices.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
        return Err(LaveError::domain(format!(
            "price at index {i} is not a positive finite number"
        )));
    }
    ReturnSeries::new(prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect())
}

/// `(theta / C_gamma)^(1/gamma)`.
pub fn theta_to_sigma(theta: f64, params: &PowerParams) -> Result<f64> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(LaveError::domain(format!("theta must be positive, got {theta}")));
    }
    Ok((theta / params.c_gamma).powf(1.0 / params.gamma))
}

/// `C_gamma * sigma^gamma`.
pub fn sigma_to_theta(sigma: f64, params: &PowerParams) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(LaveError::domain(format!("sigma must be positive, got {sigma}")));
    }
    Ok(params.c_gamma * sigma.powf(params.gamma))
}
