// SPDX-License-Identifier: MIT OR Apache-2.0

//! Forecast loss, moment summaries, autocorrelations and the LAVE versus
//! GARCH comparison.

use std::collections::BTreeMap;

use crate::error::{LaveError, Result};
use crate::estimator::{estimate_path, LaveConfig};
use crate::garch::{rolling_forecast, GARCH_WINDOW};
use crate::types::ReturnSeries;

/// Default exponent of the forecast criterion.
pub const DEFAULT_P: f64 = 0.5;

/// One-step-ahead forecast of `R_{t+1}^2` made at time `t` (1-based).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Forecast {
    pub t: usize,
    pub sigma_sq: f64,
}

/// Mean of `|R_{t+1}^2 - sigma_sq|^p` over the forecasts.
pub fn forecast_criterion(r: &ReturnSeries, forecasts: &[Forecast], p: f64) -> Result<f64> {
    if forecasts.is_empty() {
        return Err(LaveError::size("empty forecast set"));
    }
    if !(p > 0.0 && p.is_finite()) {
        return Err(LaveError::domain(format!("p must be positive, got {p}")));
    }
    let v = r.values();
    let mut total = 0.0;
    for f in forecasts {
        if f.t == 0 || f.t >= v.len() {
            return Err(LaveError::domain(format!(
                "forecast at t = {} has no target in a series of length {}",
                f.t,
                v.len()
            )));
        }
        total += (v[f.t].powi(2) - f.sigma_sq).abs().powf(p);
    }
    Ok(total / forecasts.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

/// Population central moments; kurtosis is not excess (Gaussian gives 3).
pub fn summary_stats(x: &[f64]) -> Result<SummaryStats> {
    let n = x.len();
    if n < 4 {
        return Err(LaveError::InsufficientData {
            needed: 4,
            available: n,
        });
    }
    let nf = n as f64;
    let mean = x.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    if !(m2 > 0.0) {
        return Err(LaveError::domain("zero variance"));
    }
    Ok(SummaryStats {
        n,
        mean,
        variance: m2,
        skewness: m3 / m2.powf(1.5),
        kurtosis: m4 / (m2 * m2),
    })
}

/// Sample autocorrelations at lags `0..=max_lag`.
pub fn acf(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = x.len();
    if n <= max_lag {
        return Err(LaveError::InsufficientData {
            needed: max_lag + 1,
            available: n,
        });
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let d: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let c0 = d.iter().map(|v| v * v).sum::<f64>();
    if !(c0 > 0.0) {
        return Err(LaveError::domain("zero variance"));
    }
    Ok((0..=max_lag)
        .map(|k| d[..n - k].iter().zip(&d[k..]).map(|(a, b)| a * b).sum::<f64>() / c0)
        .collect())
}

/// `R_t / sigma_t` over the indices where an estimate exists.
pub fn standardized_returns(r: &ReturnSeries, sigma_hat: &[Option<f64>]) -> Result<Vec<f64>> {
    if r.len() != sigma_hat.len() {
        return Err(LaveError::size(format!(
            "series has {} points, estimates {}",
            r.len(),
            sigma_hat.len()
        )));
    }
    let mut out = Vec::with_capacity(r.len());
    for (x, s) in r.values().iter().zip(sigma_hat) {
        if let Some(s) = *s {
            if !(s > 0.0) {
                return Err(LaveError::domain(format!("nonpositive volatility estimate {s}")));
            }
            out.push(x / s);
        }
    }
    Ok(out)
}

/// Linear-interpolation quantile of sorted data; NaN for an empty slice.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let h = q.clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForecastComparison {
    pub lave_score: f64,
    pub garch_score: f64,
    pub ratio: f64,
    /// First forecast origin shared by both forecasters.
    pub t0: usize,
    pub p: f64,
    pub count: usize,
}

/// LAVE forecasts: the current estimate `sigma_t^2` predicts `R_{t+1}^2`.
pub fn lave_forecasts(r: &ReturnSeries, config: &LaveConfig) -> Result<Vec<Forecast>> {
    let path = estimate_path(r, config)?;
    Ok(path
        .records
        .iter()
        .filter(|rec| rec.tau < r.len())
        .filter_map(|rec| {
            rec.estimate.map(|e| Forecast {
                t: rec.tau,
                sigma_sq: e.sigma_hat * e.sigma_hat,
            })
        })
        .collect())
}

/// Scores two forecast sets over the origins they share.
pub fn compare_forecast_sets(
    r: &ReturnSeries,
    lave: &[Forecast],
    garch: &[Forecast],
    p: f64,
) -> Result<ForecastComparison> {
    let g: BTreeMap<usize, f64> = garch.iter().map(|f| (f.t, f.sigma_sq)).collect();
    let mut a = Vec::new();
    let mut b = Vec::new();
    for f in lave {
        if let Some(&s) = g.get(&f.t) {
            a.push(*f);
            b.push(Forecast { t: f.t, sigma_sq: s });
        }
    }
    if a.is_empty() {
        return Err(LaveError::size("the forecasters share no forecast origin"));
    }
    let lave_score = forecast_criterion(r, &a, p)?;
    let garch_score = forecast_criterion(r, &b, p)?;
    Ok(ForecastComparison {
        lave_score,
        garch_score,
        ratio: lave_score / garch_score,
        t0: a[0].t,
        p,
        count: a.len(),
    })
}

/// Runs LAVE and the rolling GARCH benchmark and scores both with `p = 0.5`.
pub fn compare_forecasters(r: &ReturnSeries, config: &LaveConfig, garch_window: usize) -> Result<ForecastComparison> {
    let lave = lave_forecasts(r, config)?;
    let garch = rolling_forecast(r, garch_window)?;
    let garch: Vec<Forecast> = garch
        .forecasts
        .iter()
        .map(|f| Forecast {
            t: f.t,
            sigma_sq: f.sigma_sq,
        })
        .collect();
    compare_forecast_sets(r, &lave, &garch, DEFAULT_P)
}

/// [`compare_forecasters`] with the default window.
pub fn compare_forecasters_default(r: &ReturnSeries, config: &LaveConfig) -> Result<ForecastComparison> {
    compare_forecasters(r, config, GARCH_WINDOW)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{normal_draws, stream_rng};
    use proptest::prelude::*;

    fn series(v: Vec<f64>) -> ReturnSeries {
        ReturnSeries::new(v).unwrap()
    }

    #[test]
    fn criterion_examples() {
        let r = series(vec![0.0, 2.0, -1.0, 3.0]);
        let exact: Vec<Forecast> = (1..4)
            .map(|t| Forecast {
                t,
                sigma_sq: r.values()[t].powi(2),
            })
            .collect();
        assert_eq!(forecast_criterion(&r, &exact, 0.5).unwrap(), 0.0);
        let one = [Forecast { t: 1, sigma_sq: 1.0 }];
        assert!((forecast_criterion(&r, &one, 0.5).unwrap() - 3f64.sqrt()).abs() < 1e-12);
        let flat: Vec<Forecast> = (1..4).map(|t| Forecast { t, sigma_sq: 1.0 }).collect();
        assert!((forecast_criterion(&r, &flat, 1.0).unwrap() - (3.0 + 0.0 + 8.0) / 3.0).abs() < 1e-12);
        assert!(forecast_criterion(&r, &[], 0.5).is_err());
        assert!(forecast_criterion(&r, &[Forecast { t: 4, sigma_sq: 1.0 }], 0.5).is_err());
    }

    #[test]
    fn criterion_scales_with_returns() {
        let r = series(normal_draws(&mut stream_rng(5, 0), 200));
        let f: Vec<Forecast> = (1..200)
            .map(|t| Forecast {
                t,
                sigma_sq: 1.0 + (t % 3) as f64,
            })
            .collect();
        let base = forecast_criterion(&r, &f, 0.5).unwrap();
        let c = 3.0;
        let g: Vec<Forecast> = f
            .iter()
            .map(|x| Forecast {
                t: x.t,
                sigma_sq: c * c * x.sigma_sq,
            })
            .collect();
        assert!((forecast_criterion(&r.scaled(c), &g, 0.5).unwrap() - c * base).abs() < 1e-10);
    }

    #[test]
    fn summary_examples() {
        let s = summary_stats(&[1.0, -1.0, 1.0, -1.0]).unwrap();
        assert_eq!(
            (s.n, s.mean, s.variance, s.skewness, s.kurtosis),
            (4, 0.0, 1.0, 0.0, 1.0)
        );
        let g = normal_draws(&mut stream_rng(11, 0), 100_000);
        assert!((summary_stats(&g).unwrap().kurtosis - 3.0).abs() < 0.1);
        assert!(summary_stats(&[1.0; 10]).is_err());
        assert!(summary_stats(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn acf_examples() {
        let x = normal_draws(&mut stream_rng(2, 0), 10_000);
        let a = acf(&x, 50).unwrap();
        assert_eq!(a[0], 1.0);
        let band = 3.0 / (x.len() as f64).sqrt();
        let inside = a[1..].iter().filter(|v| v.abs() < band).count();
        assert!(inside as f64 >= 0.95 * 50.0);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let b = acf(&neg, 50).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() < 1e-12);
        }
        assert!(acf(&[1.0; 20], 5).is_err());
        assert!(acf(&x[..5], 5).is_err());
    }

    #[test]
    fn standardization() {
        let x = normal_draws(&mut stream_rng(4, 0), 5000);
        let r = series(x.iter().map(|v| 2.0 * v).collect());
        let s = standardized_returns(&r, &vec![Some(2.0); 5000]).unwrap();
        assert!((summary_stats(&s).unwrap().variance - 1.0).abs() < 0.05);
        let doubled = standardized_returns(&r.scaled(2.0), &vec![Some(4.0); 5000]).unwrap();
        assert_eq!(s, doubled);
        let partial = standardized_returns(&series(vec![1.0, 2.0]), &[None, Some(4.0)]).unwrap();
        assert_eq!(partial, vec![0.5]);
        assert!(standardized_returns(&series(vec![1.0]), &[Some(0.0)]).is_err());
        assert!(standardized_returns(&series(vec![1.0]), &[]).is_err());
    }

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert_eq!(quantile(&v, 0.25), 1.75);
        assert!(quantile(&[], 0.5).is_nan());
    }

    #[test]
    fn identical_forecasters_have_unit_ratio() {
        let r = series(normal_draws(&mut stream_rng(9, 0), 100));
        let f: Vec<Forecast> = (10..99).map(|t| Forecast { t, sigma_sq: 1.0 }).collect();
        let c = compare_forecast_sets(&r, &f, &f, 0.5).unwrap();
        assert_eq!(c.ratio, 1.0);
        assert_eq!((c.t0, c.count), (10, 89));
        let later: Vec<Forecast> = (50..99).map(|t| Forecast { t, sigma_sq: 2.0 }).collect();
        let c = compare_forecast_sets(&r, &f, &later, 0.5).unwrap();
        assert_eq!((c.t0, c.count), (50, 49));
        assert!(compare_forecast_sets(&r, &f[..5], &later, 0.5).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn moments_match_two_pass(x in prop::collection::vec(-100.0f64..100.0, 4..200)) {
            prop_assume!(x.iter().any(|v| (v - x[0]).abs() > 1e-3));
            let s = summary_stats(&x).unwrap();
            let n = x.len() as f64;
            let mean = x.iter().sum::<f64>() / n;
            let m = |k: i32| x.iter().map(|v| (v - mean).powi(k)).sum::<f64>() / n;
            let (m2, m3, m4) = (m(2), m(3), m(4));
            prop_assert!((s.mean - mean).abs() <= 1e-12 * (1.0 + mean.abs()));
            prop_assert!((s.variance - m2).abs() <= 1e-12 * m2);
            prop_assert!((s.skewness - m3 / m2.powf(1.5)).abs() <= 1e-12 * (1.0 + s.skewness.abs()));
            prop_assert!((s.kurtosis - m4 / (m2 * m2)).abs() <= 1e-12 * s.kurtosis);
        }
    }
}
