// SPDX-License-Identifier: MIT OR Apache-2.0

//! GARCH(1,1) with Gaussian innovations: filtering, simulation, quasi maximum
//! likelihood fitting and the rolling one-step-ahead benchmark.

use argmin::core::{CostFunction, Error as ArgminError, Executor, State, TerminationReason, TerminationStatus};
use argmin::solver::neldermead::NelderMead;
use rayon::prelude::*;

use crate::error::{LaveError, Result};
use crate::rng::{normal_draws, stream_rng};
use crate::types::ReturnSeries;

/// Default rolling window length.
pub const GARCH_WINDOW: usize = 350;
/// Smallest sample accepted by [`garch_fit`].
pub const MIN_FIT_LEN: usize = 50;
/// Fitted persistence is kept at or below `1 - STATIONARITY_MARGIN`.
pub const STATIONARITY_MARGIN: f64 = 1e-6;
pub const MAX_ITERATIONS: u64 = 4000;
const COST_TOLERANCE: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GarchParams {
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl GarchParams {
    pub fn new(omega: f64, alpha: f64, beta: f64) -> Result<Self> {
        let p = Self { omega, alpha, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega.is_finite() && self.alpha >= 0.0 && self.beta >= 0.0)
            || !(self.alpha + self.beta).is_finite()
        {
            return Err(LaveError::domain(format!(
                "GARCH parameters need omega > 0, alpha >= 0, beta >= 0 (got {}, {}, {})",
                self.omega, self.alpha, self.beta
            )));
        }
        Ok(())
    }

    pub fn persistence(&self) -> f64 {
        self.alpha + self.beta
    }

    pub fn unconditional_variance(&self) -> Result<f64> {
        if self.persistence() >= 1.0 {
            return Err(LaveError::domain(format!(
                "alpha + beta = {} leaves the variance undefined",
                self.persistence()
            )));
        }
        Ok(self.omega / (1.0 - self.persistence()))
    }

    /// Starting point `(0.1 var, 0.1, 0.8)`.
    pub fn default_init(variance: f64) -> Self {
        Self {
            omega: 0.1 * variance,
            alpha: 0.1,
            beta: 0.8,
        }
    }

    fn to_unconstrained(self) -> Vec<f64> {
        let cap = 1.0 - STATIONARITY_MARGIN;
        let s = (self.persistence() / cap).clamp(1e-9, 1.0 - 1e-9);
        let share = if self.persistence() > 0.0 {
            (self.alpha / self.persistence()).clamp(1e-9, 1.0 - 1e-9)
        } else {
            0.5
        };
        vec![self.omega.ln(), logit(s), logit(share)]
    }

    fn from_unconstrained(x: &[f64]) -> Self {
        let s = (1.0 - STATIONARITY_MARGIN) * logistic(x[1]);
        let alpha = s * logistic(x[2]);
        Self {
            omega: x[0].exp(),
            alpha,
            beta: s - alpha,
        }
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Conditional variances with `sigma_1^2 = sigma0_sq`.
pub fn garch_filter(params: &GarchParams, r: &[f64], sigma0_sq: f64) -> Result<Vec<f64>> {
    params.validate()?;
    if !(sigma0_sq > 0.0 && sigma0_sq.is_finite()) {
        return Err(LaveError::domain(format!(
            "initial variance must be positive, got {sigma0_sq}"
        )));
    }
    let mut out = Vec::with_capacity(r.len());
    if r.is_empty() {
        return Ok(out);
    }
    let mut s2 = sigma0_sq;
    out.push(s2);
    for x in &r[..r.len() - 1] {
        s2 = params.omega + params.alpha * x * x + params.beta * s2;
        out.push(s2);
    }
    Ok(out)
}

/// Gaussian log likelihood without constants: `-0.5 sum(log s2 + R^2 / s2)`.
pub fn garch_loglik(params: &GarchParams, r: &[f64], sigma0_sq: f64) -> Result<f64> {
    let s2 = garch_filter(params, r, sigma0_sq)?;
    let ll = -0.5 * r.iter().zip(&s2).map(|(x, v)| v.ln() + x * x / v).sum::<f64>();
    if !ll.is_finite() {
        return Err(LaveError::Numeric(format!("log likelihood is {ll}")));
    }
    Ok(ll)
}

/// Population variance, used as `sigma_1^2` of a fitting window.
pub fn sample_variance(r: &[f64]) -> f64 {
    let n = r.len() as f64;
    let mean = r.iter().sum::<f64>() / n;
    r.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n
}

struct NegLoglik<'a> {
    r: &'a [f64],
    sigma0_sq: f64,
}

impl CostFunction for NegLoglik<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Self::Param) -> std::result::Result<f64, ArgminError> {
        let p = GarchParams::from_unconstrained(x);
        Ok(match garch_loglik(&p, self.r, self.sigma0_sq) {
            Ok(ll) => -ll,
            Err(_) => f64::MAX,
        })
    }
}

fn nelder_mead(r: &[f64], sigma0_sq: f64, start: Vec<f64>, step: f64) -> Result<(Vec<f64>, f64, bool)> {
    let mut simplex = vec![start.clone()];
    for k in 0..start.len() {
        let mut v = start.clone();
        v[k] += step;
        simplex.push(v);
    }
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(COST_TOLERANCE)
        .map_err(|e| LaveError::Numeric(e.to_string()))?;
    let res = Executor::new(NegLoglik { r, sigma0_sq }, solver)
        .configure(|s| s.max_iters(MAX_ITERATIONS))
        .timer(false)
        .run()
        .map_err(|e| LaveError::Numeric(e.to_string()))?;
    let state = res.state();
    let best = state.get_best_param().cloned().unwrap_or(start);
    let converged = !matches!(
        state.get_termination_status(),
        TerminationStatus::Terminated(TerminationReason::MaxItersReached)
    );
    Ok((best, state.get_best_cost(), converged))
}

/// Maximizes [`garch_loglik`] with `sigma_1^2` set to the sample variance.
///
/// Nelder-Mead runs on `(log omega, logit persistence, logit alpha share)` and
/// is restarted once from its optimum.
pub fn garch_fit(r: &ReturnSeries, init: Option<GarchParams>) -> Result<GarchParams> {
    let x = r.values();
    if x.len() < MIN_FIT_LEN {
        return Err(LaveError::InsufficientData {
            needed: MIN_FIT_LEN,
            available: x.len(),
        });
    }
    let var = sample_variance(x);
    if x.iter().all(|v| *v == x[0]) || !(var > 0.0) {
        return Err(LaveError::domain("cannot fit a GARCH model to a constant series"));
    }
    let init = init.unwrap_or_else(|| GarchParams::default_init(var));
    init.validate()?;
    let (first, _, ok1) = nelder_mead(x, var, init.to_unconstrained(), 0.5)?;
    let (best, _, ok2) = nelder_mead(x, var, first, 0.05)?;
    let fitted = GarchParams::from_unconstrained(&best);
    if !(ok1 && ok2) {
        return Err(LaveError::Convergence {
            iterations: 2 * MAX_ITERATIONS as usize,
            best: vec![fitted.omega, fitted.alpha, fitted.beta],
        });
    }
    Ok(fitted)
}

/// Simulates `n` returns starting from the unconditional variance.
pub fn garch_simulate(params: &GarchParams, n: usize, seed: u64) -> Result<ReturnSeries> {
    params.validate()?;
    if n == 0 {
        return Err(LaveError::size("n must be positive"));
    }
    let xi = normal_draws(&mut stream_rng(seed, 0), n);
    let mut s2 = params.unconditional_variance()?;
    let mut out = Vec::with_capacity(n);
    for (t, z) in xi.iter().enumerate() {
        if t > 0 {
            let prev: f64 = out[t - 1];
            s2 = params.omega + params.alpha * prev * prev + params.beta * s2;
        }
        out.push(s2.sqrt() * z);
    }
    ReturnSeries::new(out)
}

/// Forecast of `R_{t+1}^2` made with data up to `t` (1-based).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GarchForecast {
    pub t: usize,
    pub sigma_sq: f64,
    pub params: GarchParams,
    /// The window's fit failed and earlier parameters were reused.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RollingForecast {
    pub window: usize,
    pub forecasts: Vec<GarchForecast>,
}

impl RollingForecast {
    pub fn fallback_count(&self) -> usize {
        self.forecasts.iter().filter(|f| f.fallback).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RollingConfig {
    pub window: usize,
    /// Start each fit from the previous optimum. Disabling it lets windows
    /// be fitted in parallel.
    pub warm_start: bool,
}

impl Default for RollingConfig {
    fn default() -> Self {
        Self {
            window: GARCH_WINDOW,
            warm_start: true,
        }
    }
}

fn window_forecast(
    x: &[f64],
    t: usize,
    window: usize,
    init: Option<GarchParams>,
    previous: Option<GarchParams>,
) -> Result<GarchForecast> {
    let sample = &x[t - window..t];
    let var = sample_variance(sample);
    let series = ReturnSeries::new(sample.to_vec())?;
    let (params, fallback) = match garch_fit(&series, init) {
        Ok(p) => (p, false),
        Err(e) => {
            log::warn!("GARCH fit at t = {t} failed: {e}");
            let p = match (previous, &e) {
                (Some(p), _) => p,
                (None, LaveError::Convergence { best, .. }) => GarchParams::new(best[0], best[1], best[2])?,
                (None, _) => GarchParams::default_init(var.max(f64::MIN_POSITIVE)),
            };
            (p, true)
        }
    };
    let s2 = garch_filter(&params, sample, var.max(f64::MIN_POSITIVE))?;
    let last = sample[window - 1];
    let sigma_sq = params.omega + params.alpha * last * last + params.beta * s2[window - 1];
    Ok(GarchForecast {
        t,
        sigma_sq,
        params,
        fallback,
    })
}

/// Refits on each window `R_{t-window+1..t}` and forecasts `sigma_{t+1}^2`.
pub fn rolling_forecast(r: &ReturnSeries, window: usize) -> Result<RollingForecast> {
    rolling_forecast_with(
        r,
        RollingConfig {
            window,
            warm_start: true,
        },
    )
}

pub fn rolling_forecast_with(r: &ReturnSeries, config: RollingConfig) -> Result<RollingForecast> {
    let x = r.values();
    let window = config.window;
    if window < MIN_FIT_LEN {
        return Err(LaveError::domain(format!(
            "window must be at least {MIN_FIT_LEN}, got {window}"
        )));
    }
    if x.len() <= window {
        return Err(LaveError::InsufficientData {
            needed: window + 1,
            available: x.len(),
        });
    }
    let forecasts = if config.warm_start {
        let mut out: Vec<GarchForecast> = Vec::with_capacity(x.len() - window);
        for t in window..x.len() {
            let prev = out.last().map(|f| f.params);
            out.push(window_forecast(x, t, window, prev, prev)?);
        }
        out
    } else {
        (window..x.len())
            .into_par_iter()
            .map(|t| window_forecast(x, t, window, None, None))
            .collect::<Result<Vec<_>>>()?
    };
    Ok(RollingForecast { window, forecasts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::summary_stats;

    fn truth() -> GarchParams {
        GarchParams::new(0.05, 0.10, 0.85).unwrap()
    }

    #[test]
    fn filter_examples() {
        let p = GarchParams::new(0.1, 0.1, 0.8).unwrap();
        let s = garch_filter(&p, &[1.0, 0.5], 1.0).unwrap();
        assert!((s[1] - 1.0).abs() < 1e-15);
        let flat = GarchParams::new(0.3, 0.0, 0.0).unwrap();
        let s = garch_filter(&flat, &[1.0, -2.0, 5.0, 0.1], 7.0).unwrap();
        assert_eq!(s, vec![7.0, 0.3, 0.3, 0.3]);
        assert!(garch_filter(&p, &[1.0], 0.0).is_err());
        assert!(GarchParams::new(0.0, 0.1, 0.1).is_err());
        assert!(GarchParams::new(0.1, -0.1, 0.1).is_err());
    }

    #[test]
    fn filter_mean_and_positivity() {
        let p = truth();
        let r = garch_simulate(&p, 100_000, 1).unwrap();
        let s = garch_filter(&p, r.values(), 1.0).unwrap();
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        assert!(
            (mean / p.unconditional_variance().unwrap() - 1.0).abs() < 0.05,
            "{mean}"
        );
        let floor = p.omega * f64::min(1.0, 1.0 / (1.0 - p.beta));
        assert!(s[1..].iter().all(|v| *v >= floor));
    }

    #[test]
    fn loglik_examples() {
        let p = GarchParams::new(1.0, 0.0, 0.0).unwrap();
        let r = [0.5, -1.5, 2.0];
        let ll = garch_loglik(&p, &r, 1.0).unwrap();
        assert!((ll + 0.5 * (0.25 + 2.25 + 4.0)).abs() < 1e-12);
        let q = truth();
        let x = garch_simulate(&q, 500, 3).unwrap();
        let v = x.values();
        let full = garch_loglik(&q, v, 0.7).unwrap();
        let s = garch_filter(&q, v, 0.7).unwrap();
        let head = garch_loglik(&q, &v[..300], 0.7).unwrap();
        let tail: f64 = -0.5
            * v[300..]
                .iter()
                .zip(&s[300..])
                .map(|(x, s)| s.ln() + x * x / s)
                .sum::<f64>();
        assert!((full - head - tail).abs() < 1e-9);
    }

    #[test]
    fn loglik_prefers_truth() {
        let p = truth();
        let doubled = GarchParams {
            omega: 2.0 * p.omega,
            ..p
        };
        let wins = (0..20)
            .filter(|&seed| {
                let r = garch_simulate(&p, 3000, seed).unwrap();
                let v = r.values();
                let s0 = sample_variance(v);
                garch_loglik(&p, v, s0).unwrap() >= garch_loglik(&doubled, v, s0).unwrap()
            })
            .count();
        assert!(wins >= 19, "{wins}");
    }

    #[test]
    fn simulate_examples() {
        let p = truth();
        let r = garch_simulate(&p, 100_000, 5).unwrap();
        let s = summary_stats(r.values()).unwrap();
        assert!((s.variance / p.unconditional_variance().unwrap() - 1.0).abs() < 0.05);
        assert!(s.kurtosis > 3.0);
        assert_eq!(garch_simulate(&p, 100, 9).unwrap(), garch_simulate(&p, 100, 9).unwrap());
        let flat = GarchParams::new(2.0, 0.0, 0.0).unwrap();
        let g = summary_stats(garch_simulate(&flat, 100_000, 6).unwrap().values()).unwrap();
        assert!((g.variance - 2.0).abs() < 0.05);
        assert!(g.skewness.abs() < 0.05 && (g.kurtosis - 3.0).abs() < 0.1);
    }

    #[test]
    fn fit_recovers_parameters() {
        let p = truth();
        let r = garch_simulate(&p, 3000, 2).unwrap();
        let f = garch_fit(&r, None).unwrap();
        assert!((f.omega - p.omega).abs() < 0.05, "{f:?}");
        assert!((f.alpha - p.alpha).abs() < 0.05, "{f:?}");
        assert!((f.beta - p.beta).abs() < 0.05, "{f:?}");
        assert!(f.persistence() <= 1.0 - STATIONARITY_MARGIN);
    }

    #[test]
    fn fit_on_white_noise() {
        let flat = GarchParams::new(1.5, 0.0, 0.0).unwrap();
        let r = garch_simulate(&flat, 3000, 12).unwrap();
        let f = garch_fit(&r, None).unwrap();
        let v = f.unconditional_variance().unwrap();
        assert!(
            f.alpha + f.beta < 0.2 || (v / sample_variance(r.values()) - 1.0).abs() < 0.1,
            "{f:?}"
        );
        assert!(f.omega > 0.0 && f.alpha >= 0.0 && f.beta >= 0.0);
    }

    #[test]
    fn fit_is_idempotent() {
        let r = garch_simulate(&truth(), 1000, 4).unwrap();
        let v = r.values();
        let s0 = sample_variance(v);
        let f = garch_fit(&r, None).unwrap();
        let g = garch_fit(&r, Some(f)).unwrap();
        let (a, b) = (garch_loglik(&f, v, s0).unwrap(), garch_loglik(&g, v, s0).unwrap());
        assert!((a - b).abs() < 1e-6, "{a} {b}");
    }

    #[test]
    fn fit_needs_data() {
        let r = ReturnSeries::new(vec![0.1; 49]).unwrap();
        assert!(matches!(garch_fit(&r, None), Err(LaveError::InsufficientData { .. })));
        let c = ReturnSeries::new(vec![0.1; 60]).unwrap();
        assert!(garch_fit(&c, None).is_err());
    }

    #[test]
    fn rolling_count_and_causality() {
        let r = garch_simulate(&truth(), 420, 8).unwrap();
        let f = rolling_forecast(&r, GARCH_WINDOW).unwrap();
        assert_eq!(f.forecasts.len(), 70);
        assert_eq!(f.forecasts[0].t, 350);
        let mut v = r.values().to_vec();
        v[360] += 5.0;
        let g = rolling_forecast(&ReturnSeries::new(v).unwrap(), GARCH_WINDOW).unwrap();
        assert_eq!(f.forecasts[..11], g.forecasts[..11]);
        assert_ne!(f.forecasts[11].sigma_sq, g.forecasts[11].sigma_sq);
        assert!(rolling_forecast(&r.prefix(350), GARCH_WINDOW).is_err());
    }

    #[test]
    fn rolling_tracks_true_variance() {
        let p = truth();
        let n = 900;
        let r = garch_simulate(&p, n, 21).unwrap();
        let s = {
            // the simulator starts from the unconditional variance
            garch_filter(&p, r.values(), p.unconditional_variance().unwrap()).unwrap()
        };
        let f = rolling_forecast(&r, GARCH_WINDOW).unwrap();
        let next = |t: usize| p.omega + p.alpha * r.values()[t - 1].powi(2) + p.beta * s[t - 1];
        let ratio = f.forecasts.iter().map(|x| x.sigma_sq / next(x.t)).sum::<f64>() / f.forecasts.len() as f64;
        assert!((0.9..=1.1).contains(&ratio), "{ratio}");
    }

    #[test]
    fn cold_rolling_matches_independent_fits() {
        let r = garch_simulate(&truth(), 360, 30).unwrap();
        let cfg = RollingConfig {
            window: 350,
            warm_start: false,
        };
        let f = rolling_forecast_with(&r, cfg).unwrap();
        assert_eq!(f.forecasts.len(), 10);
        let direct = garch_fit(&ReturnSeries::new(r.values()[..350].to_vec()).unwrap(), None).unwrap();
        assert_eq!(f.forecasts[0].params, direct);
        assert_eq!(rolling_forecast_with(&r, cfg).unwrap(), f);
    }
}
