// SPDX-License-Identifier: MIT OR Apache-2.0

//! Monte Carlo calibration of the test threshold.
//!
//! Under homogeneity the transformed series is `theta * (1 + s_gamma * zeta_t)`
//! and the procedure is invariant to `theta`, so the false-alarm rate of a
//! threshold depends only on `(gamma, M, m0)`. A replication counts as a false
//! alarm when the scan at `tau = M` rejects some candidate of length `<= M`.

use rayon::prelude::*;

use crate::error::{LaveError, Result};
use crate::estimator::{critical_lambda, select_interval};
use crate::rng::{stream_rng, StreamRng};
use crate::transform::power_moments;
use crate::types::{PowerParams, TransformedSeries};
use rand_distr::{Distribution, StandardNormal};

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_REPLICATIONS: usize = 2000;
pub const DEFAULT_SEED: u64 = 20_040_401;
pub const LAMBDA_BRACKET: (f64, f64) = (0.5, 6.0);
pub const RATE_TOLERANCE: f64 = 0.005;

const BISECTION_WIDTH: f64 = 1e-4;

/// Published thresholds `(gamma, M, lambda)` for `m0 = 10`, `alpha = 0.05`.
pub const PUBLISHED_LAMBDAS: [(f64, usize, f64); 6] = [
    (0.5, 80, 2.74),
    (0.5, 40, 2.40),
    (1.0, 80, 2.58),
    (1.0, 40, 2.24),
    (2.0, 80, 2.18),
    (2.0, 40, 1.86),
];

pub fn published_lambda(gamma: f64, horizon: usize) -> Option<f64> {
    PUBLISHED_LAMBDAS
        .iter()
        .find(|(g, m, _)| *g == gamma && *m == horizon)
        .map(|(_, _, l)| *l)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationSpec {
    pub gamma: f64,
    /// Length `M` of the homogeneous interval that should survive.
    pub horizon: usize,
    pub m0: usize,
    pub target_alpha: f64,
    pub replications: usize,
    pub seed: u64,
    /// Level of the constant trend; has no influence on the result.
    pub theta: f64,
}

impl CalibrationSpec {
    pub fn new(gamma: f64, horizon: usize, m0: usize) -> Self {
        Self {
            gamma,
            horizon,
            m0,
            target_alpha: DEFAULT_ALPHA,
            replications: DEFAULT_REPLICATIONS,
            seed: DEFAULT_SEED,
            theta: 1.0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_replications(mut self, replications: usize) -> Self {
        self.replications = replications;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.target_alpha = alpha;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m0 == 0 || self.horizon < 2 * self.m0 {
            return Err(LaveError::domain(format!(
                "horizon M = {} must be at least 2 * m0 = {}",
                self.horizon,
                2 * self.m0
            )));
        }
        if !(self.target_alpha > 0.0 && self.target_alpha < 1.0) {
            return Err(LaveError::domain(format!(
                "target alpha must lie in (0, 1), got {}",
                self.target_alpha
            )));
        }
        if self.replications == 0 {
            return Err(LaveError::size("at least one replication is required"));
        }
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(LaveError::domain("theta must be positive"));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(LaveError::domain("gamma must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationResult {
    pub lambda: f64,
    pub achieved_rate: f64,
    pub replications: usize,
    /// Half-width of the binomial 95% interval at the target rate.
    pub ci_halfwidth: f64,
    pub spec: CalibrationSpec,
}

fn homogeneous_from(rng: &mut StreamRng, len: usize, theta: f64, params: &PowerParams) -> TransformedSeries {
    let values = (0..len)
        .map(|_| {
            let xi: f64 = StandardNormal.sample(rng);
            theta * xi.abs().powf(params.gamma) / params.c_gamma
        })
        .collect();
    TransformedSeries::from_values(values, params.gamma).expect("non-negative by construction")
}

/// `M` draws of `1 + s_gamma * zeta_t`, generated as `|xi|^gamma / C_gamma`.
pub fn simulate_homogeneous(len: usize, params: &PowerParams, seed: u64) -> TransformedSeries {
    homogeneous_from(&mut stream_rng(seed, 0), len, 1.0, params)
}

fn replication(spec: &CalibrationSpec, params: &PowerParams, index: usize) -> TransformedSeries {
    homogeneous_from(
        &mut stream_rng(spec.seed, index as u64),
        spec.horizon,
        spec.theta,
        params,
    )
}

/// Fraction of replications in which the scan at `tau = M` rejects a candidate.
pub fn rejection_frequency(lambda: f64, spec: &CalibrationSpec) -> Result<f64> {
    spec.validate()?;
    if !(lambda >= 0.0) {
        return Err(LaveError::domain(format!("lambda must be non-negative, got {lambda}")));
    }
    let params = power_moments(spec.gamma)?;
    let rejected = (0..spec.replications)
        .into_par_iter()
        .map(|i| {
            let y = replication(spec, &params, i);
            select_interval(&y, spec.horizon, spec.m0, lambda, &params).map(|s| s.rejected_at.is_some())
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(rejected.iter().filter(|r| **r).count() as f64 / spec.replications as f64)
}

/// Per-replication critical thresholds (common random numbers across lambda).
pub fn critical_lambdas(spec: &CalibrationSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let params = power_moments(spec.gamma)?;
    (0..spec.replications)
        .into_par_iter()
        .map(|i| {
            critical_lambda(
                &replication(spec, &params, i),
                spec.horizon,
                spec.m0,
                spec.horizon,
                &params,
            )
        })
        .collect()
}

fn rate_above(critical: &[f64], lambda: f64) -> f64 {
    critical.iter().filter(|c| **c > lambda).count() as f64 / critical.len() as f64
}

/// Bisection on `lambda` over `[0.5, 6]` for the target false-alarm rate.
///
/// All evaluations share the same replications, so the rate is a
/// non-increasing step function of `lambda`. Bisection runs to a width of
/// `1e-4` and returns the upper end, the smallest bracketed threshold whose
/// rate does not exceed the target.
pub fn calibrate_lambda(spec: &CalibrationSpec) -> Result<CalibrationResult> {
    let critical = critical_lambdas(spec)?;
    let alpha = spec.target_alpha;
    let (mut lo, mut hi) = LAMBDA_BRACKET;
    let (rate_lo, rate_hi) = (rate_above(&critical, lo), rate_above(&critical, hi));
    if rate_lo < alpha || rate_hi > alpha {
        return Err(LaveError::Bracket {
            target: alpha,
            lo,
            hi,
            rate_lo,
            rate_hi,
        });
    }
    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        if rate_above(&critical, mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let n = spec.replications as f64;
    Ok(CalibrationResult {
        lambda: hi,
        achieved_rate: rate_above(&critical, hi),
        replications: spec.replications,
        ci_halfwidth: 1.96 * (alpha * (1.0 - alpha) / n).sqrt(),
        spec: *spec,
    })
}

/// Closed-form conservative threshold `(1 + eps) sqrt(2 a log(M / (m0 alpha)))`.
pub fn conservative_lambda(horizon: usize, m0: usize, alpha: f64, a_gamma: f64, epsilon: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) || m0 == 0 || !(a_gamma > 0.0) || !(epsilon >= 0.0) {
        return Err(LaveError::domain("invalid arguments to conservative_lambda"));
    }
    let arg = horizon as f64 / (m0 as f64 * alpha);
    if arg <= 1.0 {
        return Err(LaveError::domain(format!(
            "log argument M / (m0 alpha) = {arg} must exceed 1"
        )));
    }
    Ok((1.0 + epsilon) * (2.0 * a_gamma * arg.ln()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn homogeneous_simulation_moments() {
        let p = power_moments(0.5).unwrap();
        let y = simulate_homogeneous(1_000_000, &p, 11);
        let v = y.values();
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        assert!((mean - 1.0).abs() < 4.0 * p.s_gamma * 1e-3, "mean {mean}");
        assert!((var - p.s_gamma.powi(2)).abs() < 2e-3, "var {var}");
        assert!(v.iter().all(|x| *x >= 0.0));
    }

    #[test]
    fn extreme_lambdas() {
        let spec = CalibrationSpec::new(0.5, 40, 10).with_replications(300);
        assert_eq!(rejection_frequency(1e6, &spec).unwrap(), 0.0);
        assert_eq!(rejection_frequency(0.0, &spec).unwrap(), 1.0);
    }

    #[test]
    fn frequency_routes_agree() {
        let spec = CalibrationSpec::new(1.0, 60, 10).with_replications(400).with_seed(5);
        let crit = critical_lambdas(&spec).unwrap();
        for lambda in [1.5, 2.0, 2.5, 3.0] {
            assert_eq!(rejection_frequency(lambda, &spec).unwrap(), rate_above(&crit, lambda));
        }
    }

    #[test]
    fn spec_validation() {
        assert!(CalibrationSpec::new(0.5, 15, 10).validate().is_err());
        assert!(CalibrationSpec::new(0.5, 40, 10).with_alpha(1.0).validate().is_err());
        assert!(CalibrationSpec::new(0.5, 40, 10)
            .with_replications(0)
            .validate()
            .is_err());
        assert!(CalibrationSpec::new(0.5, 20, 10).validate().is_ok());
    }

    #[test]
    fn bracket_error_for_unreachable_target() {
        let spec = CalibrationSpec::new(0.5, 40, 10)
            .with_replications(200)
            .with_alpha(0.999);
        assert!(matches!(calibrate_lambda(&spec), Err(LaveError::Bracket { .. })));
    }

    #[test]
    fn conservative_lambda_examples() {
        let l = conservative_lambda(80, 10, 0.05, 1.005, 0.0).unwrap();
        assert!((l - (2.0 * 1.005 * 160f64.ln()).sqrt()).abs() < 1e-12);
        assert!((l - 3.194).abs() < 1e-3);
        let l5 = conservative_lambda(80, 10, 0.05, 1.005, 0.05).unwrap();
        assert!((l5 - 1.05 * l).abs() < 1e-12);
        assert!(l > 2.74);
        assert!(conservative_lambda(5, 10, 0.6, 1.0, 0.0).is_err());
        assert!(conservative_lambda(80, 10, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn published_lookup() {
        assert_eq!(published_lambda(0.5, 40), Some(2.40));
        assert_eq!(published_lambda(2.0, 80), Some(2.18));
        assert_eq!(published_lambda(0.7, 80), None);
    }
}
