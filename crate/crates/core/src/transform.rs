// SPDX-License-Identifier: MIT OR Apache-2.0

//! Power transformation and the constants of the transformed Gaussian noise.
//!
//! For standard normal `xi` and exponent `gamma`, the transformed noise is
//! `zeta = (|xi|^gamma - C) / D` with `C = E|xi|^gamma` and
//! `D^2 = Var|xi|^gamma`. The sub-Gaussian constant `a_gamma` is the supremum
//! of `2 log E exp(u zeta) / u^2` over `u > 0`.

use std::f64::consts::PI;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{LaveError, Result};
use crate::quadrature::integrate;
use crate::rng::stream_rng;
use crate::types::{PowerParams, ReturnSeries, TransformedSeries};

/// Upper integration limit for half-normal integrands with bounded growth.
pub const HALF_NORMAL_UPPER: f64 = 40.0;

/// Search domain and resolution for `a_gamma`.
pub const A_GAMMA_U_MIN: f64 = 1e-3;
pub const A_GAMMA_U_MAX: f64 = 50.0;
pub const A_GAMMA_GRID_POINTS: usize = 400;

const A_GAMMA_U_CEILING: f64 = 1e4;

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(LaveError::domain(format!(
            "gamma must be positive and finite, got {gamma}"
        )))
    }
}

fn is_integer(x: f64) -> bool {
    x.fract() == 0.0 && x <= 64.0
}

/// `E|xi|^gamma` for standard normal `xi`, via `2^(g/2) Gamma((g+1)/2) / sqrt(pi)`.
///
/// Integer exponents use the exact double-factorial form, so `gamma = 2`
/// gives exactly 1.
pub fn gaussian_abs_moment(gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if is_integer(gamma) {
        let n = gamma as u32;
        // (n-1)!! for even n, (n-1)!! * sqrt(2/pi) for odd n
        let mut df = 1.0;
        let mut k = n as i64 - 1;
        while k > 1 {
            df *= k as f64;
            k -= 2;
        }
        return Ok(if n.is_multiple_of(2) {
            df
        } else {
            df * (2.0 / PI).sqrt()
        });
    }
    let log_m = 0.5 * gamma * std::f64::consts::LN_2 + libm::lgamma(0.5 * (gamma + 1.0)) - 0.5 * PI.ln();
    Ok(log_m.exp())
}

/// `E|xi|^gamma` by adaptive quadrature of `2 x^gamma phi(x)` on `[0, 40]`.
pub fn gaussian_abs_moment_quadrature(gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let norm = 2.0 / (2.0 * PI).sqrt();
    let q = integrate(
        |x: f64| norm * x.powf(gamma) * (-0.5 * x * x).exp(),
        0.0,
        HALF_NORMAL_UPPER,
        1e-16,
        1e-13,
    )?;
    Ok(q.value)
}

/// `C`, `D` and `s = D/C` for exponent `gamma`, leaving `a_gamma` unset.
pub fn power_moments(gamma: f64) -> Result<PowerParams> {
    let c = gaussian_abs_moment(gamma)?;
    let c2 = gaussian_abs_moment(2.0 * gamma)?;
    let d_sq = c2 - c * c;
    if !(d_sq > 0.0) {
        return Err(LaveError::Numeric(format!(
            "non-positive noise variance for gamma {gamma}"
        )));
    }
    let d = d_sq.sqrt();
    Ok(PowerParams {
        gamma,
        c_gamma: c,
        d_gamma: d,
        s_gamma: d / c,
        a_gamma: None,
    })
}

/// Full constant set; `a_gamma` is computed for `gamma <= 1`.
pub fn power_constants(gamma: f64) -> Result<PowerParams> {
    let mut params = power_moments(gamma)?;
    if gamma <= 1.0 {
        params.a_gamma = Some(compute_a_gamma(&params)?);
    }
    Ok(params)
}

/// Elementwise `|R_t|^gamma`.
pub fn power_transform(r: &ReturnSeries, gamma: f64) -> Result<TransformedSeries> {
    check_gamma(gamma)?;
    TransformedSeries::from_values(r.values().iter().map(|x| x.abs().powf(gamma)).collect(), gamma)
}

/// Seeded i.i.d. draws of the normalized noise `(|xi|^gamma - C) / D`.
pub fn noise_sample(params: &PowerParams, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, 0);
    (0..count)
        .map(|_| {
            let xi: f64 = StandardNormal.sample(&mut rng);
            (xi.abs().powf(params.gamma) - params.c_gamma) / params.d_gamma
        })
        .collect()
}

/// `log E exp(u zeta)` by quadrature against the half-normal density.
fn log_mgf(params: &PowerParams, u: f64) -> Result<f64> {
    let PowerParams {
        gamma,
        c_gamma: c,
        d_gamma: d,
        ..
    } = *params;
    let norm = 2.0 / (2.0 * PI).sqrt();
    if gamma > 2.0 || (gamma == 2.0 && u >= 0.5 * d) {
        return Err(LaveError::Divergence(format!(
            "E exp(u zeta) is infinite for gamma = {gamma}, u = {u}"
        )));
    }
    if u <= 0.5 {
        // E exp(u zeta) = 1 + E[expm1(u zeta) - u zeta], since E zeta = 0.
        let excess = integrate(
            |x: f64| {
                let uz = u * (x.powf(gamma) - c) / d;
                norm * (-0.5 * x * x).exp() * (uz.exp_m1() - uz)
            },
            0.0,
            HALF_NORMAL_UPPER,
            1e-300,
            1e-12,
        )?;
        return Ok(excess.value.ln_1p());
    }
    // Shift the exponent g(x) = -x^2/2 + u x^gamma / D by its maximum.
    let g = |x: f64| -0.5 * x * x + u * x.powf(gamma) / d;
    let x_peak = if gamma < 2.0 {
        (u * gamma / d).powf(1.0 / (2.0 - gamma))
    } else {
        0.0
    };
    let g_peak = g(x_peak);
    let mut upper = x_peak + HALF_NORMAL_UPPER;
    while g(upper) - g_peak > -745.0 {
        upper *= 2.0;
        if !upper.is_finite() {
            return Err(LaveError::Divergence("integrand does not decay".into()));
        }
    }
    let f = |x: f64| norm * (g(x) - g_peak).exp();
    let left = integrate(f, 0.0, x_peak, 1e-300, 1e-12)?;
    let right = integrate(f, x_peak, upper, 1e-300, 1e-12)?;
    let mass = left.value + right.value;
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(LaveError::Numeric(format!("log-Laplace quadrature failed at u = {u}")));
    }
    Ok(g_peak - u * c / d + mass.ln())
}

/// `2 log E exp(u zeta) / u^2`, the log-Laplace transform of the transformed
/// noise relative to that of a standard normal.
pub fn log_laplace_ratio(params: &PowerParams, u: f64) -> Result<f64> {
    if !(u > 0.0 && u.is_finite()) {
        return Err(LaveError::domain(format!("u must be positive, got {u}")));
    }
    Ok(2.0 * log_mgf(params, u)? / (u * u))
}

/// Sampled log-Laplace ratio curve.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceCurve {
    pub u_grid: Vec<f64>,
    pub ratio: Vec<f64>,
}

pub fn geometric_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let step = (hi / lo).ln() / (points - 1) as f64;
    (0..points).map(|i| lo * (step * i as f64).exp()).collect()
}

pub fn laplace_curve(params: &PowerParams, u_grid: &[f64]) -> Result<LaplaceCurve> {
    let ratio = u_grid
        .iter()
        .map(|&u| log_laplace_ratio(params, u))
        .collect::<Result<Vec<_>>>()?;
    Ok(LaplaceCurve {
        u_grid: u_grid.to_vec(),
        ratio,
    })
}

fn golden_max<F: Fn(f64) -> Result<f64>>(f: F, mut lo: f64, mut hi: f64) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > 1e-9 * hi.max(1.0) {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1)?;
        }
    }
    Ok(if f1 > f2 { (x1, f1) } else { (x2, f2) })
}

/// The smallest `a` with `log E exp(u zeta) <= a u^2 / 2` for all `u > 0`.
///
/// Scans a 400-point geometric grid on `[1e-3, 50]` and refines the grid
/// maximum by golden-section search. When the ratio decreases from the
/// origin (negative skew, e.g. `gamma = 0.25`) the supremum is the limit 1. The maximum must be interior, with the
/// ratio decreasing at the right edge; otherwise the domain is widened. At
/// `gamma = 1` the ratio increases monotonically to its limit `1 / D^2`,
/// which is returned.
pub fn compute_a_gamma(params: &PowerParams) -> Result<f64> {
    let gamma = params.gamma;
    if gamma > 1.0 {
        return Err(LaveError::Unsupported(format!(
            "a_gamma is only defined for gamma <= 1, got {gamma}"
        )));
    }
    let ratio = |u: f64| log_laplace_ratio(params, u);
    let mut u_max = A_GAMMA_U_MAX;
    loop {
        let grid = geometric_grid(A_GAMMA_U_MIN, u_max, A_GAMMA_GRID_POINTS);
        let values = grid.iter().map(|&u| ratio(u)).collect::<Result<Vec<_>>>()?;
        let (k, _) = values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty grid");
        let last = values.len() - 1;
        if k < last && values[last] < values[last - 1] {
            let lo = grid[k.saturating_sub(1)];
            let hi = grid[(k + 1).min(last)];
            let (_, best) = golden_max(ratio, lo, hi)?;
            // The ratio tends to 1 as u -> 0, so the supremum is at least 1.
            return Ok(best.max(values[k]).max(1.0));
        }
        if gamma == 1.0 {
            // E exp(a|xi|) = 2 exp(a^2/2) Phi(a), so the ratio tends to 1/D^2 from below.
            let limit = 1.0 / (params.d_gamma * params.d_gamma);
            if values[last] <= limit {
                return Ok(limit);
            }
            return Err(LaveError::Numeric("ratio exceeds its analytic limit".into()));
        }
        u_max *= 4.0;
        if u_max > A_GAMMA_U_CEILING {
            return Err(LaveError::Divergence(format!(
                "log-Laplace ratio still increasing at u = {}",
                u_max / 4.0
            )));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn abs_moment_examples() {
        assert_eq!(gaussian_abs_moment(2.0).unwrap(), 1.0);
        assert!((gaussian_abs_moment(1.0).unwrap() - 0.797_884_560_802_865_4).abs() < 1e-15);
        assert!((gaussian_abs_moment(0.5).unwrap() - 0.822_179).abs() < 1e-6);
        assert!(gaussian_abs_moment(0.0).is_err());
        assert!(gaussian_abs_moment(-1.0).is_err());
    }

    #[test]
    fn closed_form_matches_quadrature() {
        for g in [0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0] {
            let closed = gaussian_abs_moment(g).unwrap();
            let quad = gaussian_abs_moment_quadrature(g).unwrap();
            assert!(
                ((closed - quad) / closed).abs() < 1e-10,
                "gamma {g}: {closed} vs {quad}"
            );
        }
    }

    #[test]
    fn power_moments_examples() {
        let p = power_moments(2.0).unwrap();
        assert_eq!(p.c_gamma, 1.0);
        assert!((p.d_gamma * p.d_gamma - 2.0).abs() < 1e-15);
        assert!((p.s_gamma - 2f64.sqrt()).abs() < 1e-15);

        let p = power_moments(1.0).unwrap();
        assert!((p.d_gamma.powi(2) - (1.0 - 2.0 / PI)).abs() < 1e-12);
        assert!((p.s_gamma - 0.755_510_639_762_866_9).abs() < 1e-13);

        // Reference values from 30-digit evaluation of the Gamma-function form.
        let p = power_moments(0.5).unwrap();
        assert!((p.c_gamma - 0.822_178_958_662_458_5).abs() < 1e-14);
        assert!((p.d_gamma.powi(2) - 0.121_906_320_735_580_7).abs() < 1e-13);
        assert!((p.s_gamma - 0.424_665_278_797_427).abs() < 1e-13);
        let c1 = gaussian_abs_moment(1.0).unwrap();
        assert!((p.d_gamma.powi(2) - (c1 - p.c_gamma.powi(2))).abs() < 1e-10);
    }

    #[test]
    fn power_constants_sets_a_gamma_only_below_one() {
        assert!(power_constants(2.0).unwrap().a_gamma.is_none());
        assert!(power_constants(0.5).unwrap().a_gamma.is_some());
        assert!(power_constants(-0.5).is_err());
    }

    #[test]
    fn power_transform_examples() {
        let r = ReturnSeries::new(vec![0.0, -1.0, 1.0]).unwrap();
        assert_eq!(power_transform(&r, 0.5).unwrap().values(), &[0.0, 1.0, 1.0]);
        let r = ReturnSeries::new(vec![-2.0]).unwrap();
        assert_eq!(power_transform(&r, 2.0).unwrap().values(), &[4.0]);
        let r = ReturnSeries::new(vec![0.04]).unwrap();
        assert!((power_transform(&r, 0.5).unwrap().values()[0] - 0.2).abs() < 1e-15);
        assert!(power_transform(&r, 0.0).is_err());
    }

    #[test]
    fn noise_sample_is_seeded() {
        let p = power_moments(0.5).unwrap();
        assert_eq!(noise_sample(&p, 100, 9), noise_sample(&p, 100, 9));
        assert_ne!(noise_sample(&p, 100, 9), noise_sample(&p, 100, 10));
    }

    fn moments(xs: &[f64]) -> (f64, f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let m3 = xs.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
        (mean, m2, m3 / m2.powf(1.5))
    }

    #[test]
    fn noise_sample_moments() {
        let p05 = power_moments(0.5).unwrap();
        let p2 = power_moments(2.0).unwrap();
        let (mean, var, skew05) = moments(&noise_sample(&p05, 1_000_000, 1));
        assert!(mean.abs() < 3e-3, "mean {mean}");
        assert!((var - 1.0).abs() < 5e-3, "var {var}");
        let (_, _, skew2) = moments(&noise_sample(&p2, 1_000_000, 1));
        assert!(skew05.abs() < skew2.abs(), "{skew05} vs {skew2}");
    }

    #[test]
    fn laplace_ratio_near_zero_is_one() {
        for g in [0.25, 0.5, 1.0] {
            let p = power_moments(g).unwrap();
            let r = log_laplace_ratio(&p, 1e-3).unwrap();
            assert!((r - 1.0).abs() < 5e-2, "gamma {g}: {r}");
        }
        let p = power_moments(0.5).unwrap();
        assert!(log_laplace_ratio(&p, 0.0).is_err());
    }

    #[test]
    fn laplace_ratio_is_continuous_across_branch() {
        let p = power_moments(0.5).unwrap();
        let below = log_laplace_ratio(&p, 0.5).unwrap();
        let above = log_laplace_ratio(&p, 0.5 + 1e-9).unwrap();
        assert!((below - above).abs() < 1e-7, "{below} vs {above}");
    }

    #[test]
    fn laplace_ratio_matches_gamma_one_closed_form() {
        // E exp(a|xi|) = 2 exp(a^2/2) Phi(a)
        let p = power_moments(1.0).unwrap();
        for u in [0.3, 1.0, 4.0] {
            let a = u / p.d_gamma;
            let phi = 0.5 * libm::erfc(-a / 2f64.sqrt());
            let log_mgf = (2.0 * phi).ln() + 0.5 * a * a - u * p.c_gamma / p.d_gamma;
            let expected = 2.0 * log_mgf / (u * u);
            let got = log_laplace_ratio(&p, u).unwrap();
            assert!(((got - expected) / expected).abs() < 1e-8, "u {u}: {got} vs {expected}");
        }
    }

    #[test]
    fn gamma_two_diverges_for_large_u() {
        let p = power_moments(2.0).unwrap();
        assert!(log_laplace_ratio(&p, 0.3).is_ok());
        assert!(matches!(log_laplace_ratio(&p, 1.0), Err(LaveError::Divergence(_))));
        assert!(matches!(compute_a_gamma(&p), Err(LaveError::Unsupported(_))));
    }

    #[test]
    fn a_gamma_values() {
        let a05 = compute_a_gamma(&power_moments(0.5).unwrap()).unwrap();
        assert!((a05 - 1.005).abs() <= 0.002, "a_0.5 = {a05}");
        let a1 = compute_a_gamma(&power_moments(1.0).unwrap()).unwrap();
        assert!(a1.is_finite() && a1 >= 1.0, "a_1 = {a1}");
        let a025 = compute_a_gamma(&power_moments(0.25).unwrap()).unwrap();
        assert!(a025 >= 1.0);
    }
}
