// SPDX-License-Identifier: MIT OR Apache-2.0

//! Locally adaptive volatility estimation.
//!
//! At time `tau` the candidate intervals are the last `m0, 2 m0, 3 m0, ...`
//! observations. A candidate `I` is rejected when some testing subinterval
//! `J` (the last `k' m0` observations, `k' m0 < |I|`) has a mean that differs
//! from the mean over `I \ J` by more than `lambda` times their combined
//! estimated standard deviation. The estimate uses the longest candidate
//! accepted before the first rejection.
//!
//! Intervals are half-open: a candidate of length `m` at time `tau` covers the
//! 0-based indices `tau - m .. tau`, i.e. observations `tau - m + 1 ..= tau`.

use rayon::prelude::*;

use crate::error::{LaveError, Result};
use crate::transform::{power_moments, power_transform};
use crate::types::{theta_to_sigma, PowerParams, ReturnSeries, TransformedSeries, VolEstimate};

/// Tuning of the adaptive procedure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaveConfig {
    pub gamma: f64,
    pub m0: usize,
    pub lambda: f64,
    /// First time point estimated; defaults to `2 * m0`.
    pub t0: Option<usize>,
    /// Upper bound on candidate lengths; unbounded by default.
    pub max_len: Option<usize>,
}

impl LaveConfig {
    pub fn new(gamma: f64, m0: usize, lambda: f64) -> Self {
        Self {
            gamma,
            m0,
            lambda,
            t0: None,
            max_len: None,
        }
    }

    pub fn with_t0(mut self, t0: usize) -> Self {
        self.t0 = Some(t0);
        self
    }

    pub fn with_max_len(mut self, max_len: usize) -> Self {
        self.max_len = Some(max_len);
        self
    }

    pub fn t0(&self) -> usize {
        self.t0.unwrap_or(2 * self.m0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(LaveError::domain(format!("gamma must be positive, got {}", self.gamma)));
        }
        if self.m0 == 0 {
            return Err(LaveError::domain("grid step m0 must be at least 1"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(LaveError::domain(format!(
                "lambda must be non-negative, got {}",
                self.lambda
            )));
        }
        if self.t0() < self.m0 {
            return Err(LaveError::domain(format!(
                "t0 = {} is smaller than m0 = {}",
                self.t0(),
                self.m0
            )));
        }
        if let Some(cap) = self.max_len {
            if cap < self.m0 {
                return Err(LaveError::domain("max_len must be at least m0"));
            }
        }
        Ok(())
    }
}

/// Candidate interval lengths at one time point.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalGrid {
    pub m0: usize,
    pub tau: usize,
    pub interval_lengths: Vec<usize>,
}

impl IntervalGrid {
    pub fn new(m0: usize, tau: usize, max_len: Option<usize>) -> Result<Self> {
        if m0 == 0 {
            return Err(LaveError::domain("grid step m0 must be at least 1"));
        }
        if tau < m0 {
            return Err(LaveError::InsufficientData {
                needed: m0,
                available: tau,
            });
        }
        let limit = max_len.map_or(tau, |cap| cap.min(tau));
        let interval_lengths = (1..=limit / m0).map(|k| k * m0).collect();
        Ok(Self {
            m0,
            tau,
            interval_lengths,
        })
    }
}

/// Outcome of one pairwise homogeneity comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneityTest {
    pub statistic: f64,
    pub threshold: f64,
    pub reject: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestRecord {
    pub candidate_len: usize,
    pub test_len: usize,
    pub statistic: f64,
    pub threshold: f64,
}

impl TestRecord {
    pub fn reject(&self) -> bool {
        self.statistic > self.threshold
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub chosen_len: usize,
    pub theta_hat: f64,
    pub v_tilde: f64,
    /// Length of the first rejected candidate, if any.
    pub rejected_at: Option<usize>,
    pub test_trace: Vec<TestRecord>,
}

/// Mean of `Y` over the half-open index range `[lo, hi)`.
pub fn interval_mean(y: &TransformedSeries, lo: usize, hi: usize) -> Result<f64> {
    if !(lo < hi && hi <= y.len()) {
        return Err(LaveError::domain(format!(
            "invalid window [{lo}, {hi}) for series of length {}",
            y.len()
        )));
    }
    if !y.window_has_mass(lo, hi) {
        return Err(LaveError::DegenerateWindow { lo, hi });
    }
    Ok(y.window_sum(lo, hi) / (hi - lo) as f64)
}

/// Plug-in standard deviation `s_gamma * theta / sqrt(len)` of a window mean.
pub fn estimated_std(theta_tilde: f64, len: usize, params: &PowerParams) -> f64 {
    params.s_gamma * theta_tilde / (len as f64).sqrt()
}

fn check_test_geometry(y: &TransformedSeries, candidate_len: usize, test_len: usize, tau: usize) -> Result<()> {
    if !(0 < test_len && test_len < candidate_len && candidate_len <= tau && tau <= y.len()) {
        return Err(LaveError::domain(format!(
            "need 0 < test_len ({test_len}) < candidate_len ({candidate_len}) <= tau ({tau}) <= n ({})",
            y.len()
        )));
    }
    Ok(())
}

// Returns |mean(I\J) - mean(J)| and sqrt(v(I\J)^2 + v(J)^2).
fn test_parts(
    y: &TransformedSeries,
    candidate_len: usize,
    test_len: usize,
    tau: usize,
    params: &PowerParams,
) -> Result<(f64, f64)> {
    let split = tau - test_len;
    let recent = interval_mean(y, split, tau)?;
    let older = interval_mean(y, tau - candidate_len, split)?;
    let v_recent = estimated_std(recent, test_len, params);
    let v_older = estimated_std(older, candidate_len - test_len, params);
    Ok(((older - recent).abs(), v_older.hypot(v_recent)))
}

/// Compares the last `test_len` observations with the preceding
/// `candidate_len - test_len` ones. Rejection requires a strict exceedance.
pub fn homogeneity_test(
    y: &TransformedSeries,
    candidate_len: usize,
    test_len: usize,
    tau: usize,
    lambda: f64,
    params: &PowerParams,
) -> Result<HomogeneityTest> {
    check_test_geometry(y, candidate_len, test_len, tau)?;
    let (statistic, scale) = test_parts(y, candidate_len, test_len, tau, params)?;
    let threshold = lambda * scale;
    Ok(HomogeneityTest {
        statistic,
        threshold,
        reject: statistic > threshold,
    })
}

/// Adaptive interval selection at time `tau` (number of observations used).
pub fn select_interval(
    y: &TransformedSeries,
    tau: usize,
    m0: usize,
    lambda: f64,
    params: &PowerParams,
) -> Result<SelectionResult> {
    select_interval_in(y, &IntervalGrid::new(m0, tau, None)?, lambda, params)
}

/// As [`select_interval`] over an explicit candidate grid.
pub fn select_interval_in(
    y: &TransformedSeries,
    grid: &IntervalGrid,
    lambda: f64,
    params: &PowerParams,
) -> Result<SelectionResult> {
    let (tau, m0) = (grid.tau, grid.m0);
    if tau > y.len() {
        return Err(LaveError::InsufficientData {
            needed: tau,
            available: y.len(),
        });
    }
    let mut trace = Vec::new();
    let mut accepted = grid.interval_lengths[0];
    let mut rejected_at = None;
    for &candidate in &grid.interval_lengths[1..] {
        let mut reject = false;
        for test_len in (1..candidate / m0).rev().map(|k| k * m0) {
            let (statistic, scale) = test_parts(y, candidate, test_len, tau, params)?;
            let threshold = lambda * scale;
            reject |= statistic > threshold;
            trace.push(TestRecord {
                candidate_len: candidate,
                test_len,
                statistic,
                threshold,
            });
        }
        if reject {
            rejected_at = Some(candidate);
            break;
        }
        accepted = candidate;
    }
    let theta_hat = interval_mean(y, tau - accepted, tau)?;
    Ok(SelectionResult {
        chosen_len: accepted,
        theta_hat,
        v_tilde: estimated_std(theta_hat, accepted, params),
        rejected_at,
        test_trace: trace,
    })
}

/// Smallest threshold at which no candidate of length `<= max_len` is rejected
/// at time `tau`: the maximum of `statistic / sqrt(v1^2 + v2^2)` over every
/// comparison the scan could perform. For any `lambda`, the scan rejects a
/// candidate up to `max_len` exactly when this value exceeds `lambda`.
pub fn critical_lambda(
    y: &TransformedSeries,
    tau: usize,
    m0: usize,
    max_len: usize,
    params: &PowerParams,
) -> Result<f64> {
    let grid = IntervalGrid::new(m0, tau, Some(max_len))?;
    let mut worst = 0.0f64;
    for &candidate in &grid.interval_lengths[1..] {
        for test_len in (1..candidate / m0).map(|k| k * m0) {
            let (statistic, scale) = test_parts(y, candidate, test_len, tau, params)?;
            worst = worst.max(statistic / scale);
        }
    }
    Ok(worst)
}

/// One time point of an estimated path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathRecord {
    pub tau: usize,
    /// `None` only when the very first time points are degenerate.
    pub estimate: Option<VolEstimate>,
    /// The selection at this point failed on an all-zero window and the
    /// previous estimate was carried forward.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatePath {
    pub config: LaveConfig,
    pub records: Vec<PathRecord>,
}

impl EstimatePath {
    pub fn get(&self, tau: usize) -> Option<&PathRecord> {
        let first = self.records.first()?.tau;
        self.records.get(tau.checked_sub(first)?)
    }

    pub fn sigma_at(&self, tau: usize) -> Option<f64> {
        self.get(tau)?.estimate.map(|e| e.sigma_hat)
    }

    /// Length-`n` vector of sigma estimates indexed by `tau - 1`, `None` where
    /// no estimate exists.
    pub fn sigma_series(&self, n: usize) -> Vec<Option<f64>> {
        let mut out = vec![None; n];
        for rec in &self.records {
            if rec.tau <= n {
                out[rec.tau - 1] = rec.estimate.map(|e| e.sigma_hat);
            }
        }
        out
    }

    pub fn flagged_count(&self) -> usize {
        self.records.iter().filter(|r| r.flagged).count()
    }
}

fn estimate_at(y: &TransformedSeries, tau: usize, config: &LaveConfig, params: &PowerParams) -> Result<VolEstimate> {
    let grid = IntervalGrid::new(config.m0, tau, config.max_len)?;
    let sel = select_interval_in(y, &grid, config.lambda, params)?;
    Ok(VolEstimate {
        theta_hat: sel.theta_hat,
        sigma_hat: theta_to_sigma(sel.theta_hat, params)?,
        interval_len: sel.chosen_len,
        v_tilde: sel.v_tilde,
    })
}

/// Runs the selection at every `tau` from `t0` to the end of the series.
pub fn estimate_path(r: &ReturnSeries, config: &LaveConfig) -> Result<EstimatePath> {
    config.validate()?;
    let params = power_moments(config.gamma)?;
    let y = power_transform(r, config.gamma)?;
    estimate_path_transformed(&y, config, &params)
}

/// [`estimate_path`] on an already transformed series.
pub fn estimate_path_transformed(
    y: &TransformedSeries,
    config: &LaveConfig,
    params: &PowerParams,
) -> Result<EstimatePath> {
    config.validate()?;
    let t0 = config.t0();
    if y.len() < t0 {
        return Err(LaveError::InsufficientData {
            needed: t0,
            available: y.len(),
        });
    }
    let raw: Vec<Result<VolEstimate>> = (t0..=y.len())
        .into_par_iter()
        .map(|tau| estimate_at(y, tau, config, params))
        .collect();
    let mut records = Vec::with_capacity(raw.len());
    let mut previous: Option<VolEstimate> = None;
    for (tau, res) in (t0..).zip(raw) {
        match res {
            Ok(est) => {
                previous = Some(est);
                records.push(PathRecord {
                    tau,
                    estimate: Some(est),
                    flagged: false,
                });
            }
            Err(LaveError::DegenerateWindow { .. }) => {
                records.push(PathRecord {
                    tau,
                    estimate: previous,
                    flagged: true,
                });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(EstimatePath {
        config: *config,
        records,
    })
}

/// One-step-ahead volatility forecast `sigma_{t+1|t}`, the estimate at `t`
/// computed from `R_1 .. R_t` only.
pub fn forecast_next(r: &ReturnSeries, t: usize, config: &LaveConfig) -> Result<f64> {
    config.validate()?;
    if t < config.t0() {
        return Err(LaveError::domain(format!("t = {t} precedes t0 = {}", config.t0())));
    }
    if t > r.len() {
        return Err(LaveError::InsufficientData {
            needed: t,
            available: r.len(),
        });
    }
    let params = power_moments(config.gamma)?;
    let y = power_transform(&r.prefix(t), config.gamma)?;
    Ok(estimate_at(&y, t, config, &params)?.sigma_hat)
}
