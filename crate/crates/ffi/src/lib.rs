// SPDX-License-Identifier: MIT OR Apache-2.0

//! C ABI over the `lave` library.
//!
//! Every entry point returns a [`LaveStatus`]. On failure the message is kept
//! per thread and can be read with [`lave_last_error_message`]. Estimators are
//! opaque heap handles released with [`lave_estimator_free`].

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lave::calibration::{calibrate_lambda, CalibrationSpec};
use lave::estimator::{estimate_path_transformed, select_interval, LaveConfig};
use lave::evaluation::{forecast_criterion, Forecast};
use lave::garch::garch_fit;
use lave::transform::{power_constants, power_moments, power_transform};
use lave::{LaveError, PowerParams, ReturnSeries};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaveStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Size = 3,
    DegenerateWindow = 4,
    InsufficientData = 5,
    Divergence = 6,
    Unsupported = 7,
    Bracket = 8,
    Convergence = 9,
    Numeric = 10,
    Panic = 11,
}

impl From<&LaveError> for LaveStatus {
    fn from(e: &LaveError) -> Self {
        match e {
            LaveError::Domain(_) => LaveStatus::Domain,
            LaveError::Size(_) => LaveStatus::Size,
            LaveError::DegenerateWindow { .. } => LaveStatus::DegenerateWindow,
            LaveError::InsufficientData { .. } => LaveStatus::InsufficientData,
            LaveError::Divergence(_) => LaveStatus::Divergence,
            LaveError::Unsupported(_) => LaveStatus::Unsupported,
            LaveError::Bracket { .. } => LaveStatus::Bracket,
            LaveError::Convergence { .. } => LaveStatus::Convergence,
            LaveError::Numeric(_) => LaveStatus::Numeric,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

enum Failure {
    Null(&'static str),
    Lave(LaveError),
}

impl From<LaveError> for Failure {
    fn from(e: LaveError) -> Self {
        Failure::Lave(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LaveStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            LaveStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            LaveStatus::NullPointer
        }
        Ok(Err(Failure::Lave(e))) => {
            let status = LaveStatus::from(&e);
            set_error(e.to_string());
            status
        }
        Err(_) => {
            set_error("internal panic".to_string());
            LaveStatus::Panic
        }
    }
}

unsafe fn slice<'a>(data: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

/// Copies the calling thread's last error message into `buf` (NUL terminated,
/// truncated to `len`) and returns the full message length plus one.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn lave_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len() + 1
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lave_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LavePowerConstants {
    pub c_gamma: f64,
    pub d_gamma: f64,
    pub s_gamma: f64,
    /// NaN when not defined (gamma > 1).
    pub a_gamma: f64,
}

/// Gaussian constants of the power transformation.
///
/// # Safety
/// `out` must point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn lave_power_constants(gamma: f64, out_constants: *mut LavePowerConstants) -> LaveStatus {
    guard(|| {
        let dst = out(out_constants, "out_constants")?;
        let p = power_constants(gamma)?;
        *dst = LavePowerConstants {
            c_gamma: p.c_gamma,
            d_gamma: p.d_gamma,
            s_gamma: p.s_gamma,
            a_gamma: p.a_gamma.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

/// Opaque estimator configuration.
pub struct LaveEstimator {
    config: LaveConfig,
    params: PowerParams,
}

/// Creates an estimator. `t0 = 0` selects the default `2 m0`.
///
/// # Safety
/// `out_estimator` must point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn lave_estimator_new(
    gamma: f64,
    m0: usize,
    lambda: f64,
    t0: usize,
    out_estimator: *mut *mut LaveEstimator,
) -> LaveStatus {
    guard(|| {
        let dst = out(out_estimator, "out_estimator")?;
        *dst = ptr::null_mut();
        let mut config = LaveConfig::new(gamma, m0, lambda);
        if t0 > 0 {
            config = config.with_t0(t0);
        }
        config.validate()?;
        let params = power_moments(gamma)?;
        *dst = Box::into_raw(Box::new(LaveEstimator { config, params }));
        Ok(())
    })
}

/// Releases an estimator. Null is ignored.
///
/// # Safety
/// `estimator` must come from [`lave_estimator_new`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn lave_estimator_free(estimator: *mut LaveEstimator) {
    if !estimator.is_null() {
        drop(Box::from_raw(estimator));
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaveSelection {
    pub chosen_len: usize,
    pub theta_hat: f64,
    pub sigma_hat: f64,
    pub v_tilde: f64,
    /// Length of the first rejected candidate, 0 if none was rejected.
    pub rejected_at: usize,
}

/// Interval selection at time `tau` using `returns[0..tau]`.
///
/// # Safety
/// `returns` must hold `len` values; `estimator` and `out_selection` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lave_estimator_select(
    estimator: *const LaveEstimator,
    returns: *const f64,
    len: usize,
    tau: usize,
    out_selection: *mut LaveSelection,
) -> LaveStatus {
    guard(|| {
        let est = estimator.as_ref().ok_or(Failure::Null("estimator"))?;
        let dst = out(out_selection, "out_selection")?;
        let r = ReturnSeries::new(slice(returns, len, "returns")?.to_vec())?;
        let y = power_transform(&r, est.config.gamma)?;
        let s = select_interval(&y, tau, est.config.m0, est.config.lambda, &est.params)?;
        *dst = LaveSelection {
            chosen_len: s.chosen_len,
            theta_hat: s.theta_hat,
            sigma_hat: est.params.theta_to_sigma(s.theta_hat)?,
            v_tilde: s.v_tilde,
            rejected_at: s.rejected_at.unwrap_or(0),
        };
        Ok(())
    })
}

/// Estimates the whole path. `sigma_out[t - 1]` and `len_out[t - 1]` receive
/// the estimate at `t`; entries before `t0` are NaN and 0.
///
/// # Safety
/// `returns`, `sigma_out` and `len_out` must each hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn lave_estimator_path(
    estimator: *const LaveEstimator,
    returns: *const f64,
    len: usize,
    sigma_out: *mut f64,
    len_out: *mut usize,
) -> LaveStatus {
    guard(|| {
        let est = estimator.as_ref().ok_or(Failure::Null("estimator"))?;
        let r = ReturnSeries::new(slice(returns, len, "returns")?.to_vec())?;
        if len > 0 && (sigma_out.is_null() || len_out.is_null()) {
            return Err(Failure::Null("path output"));
        }
        let y = power_transform(&r, est.config.gamma)?;
        let path = estimate_path_transformed(&y, &est.config, &est.params)?;
        let sig = std::slice::from_raw_parts_mut(sigma_out, len);
        let lens = std::slice::from_raw_parts_mut(len_out, len);
        sig.fill(f64::NAN);
        lens.fill(0);
        for rec in &path.records {
            if let Some(e) = rec.estimate {
                sig[rec.tau - 1] = e.sigma_hat;
                lens[rec.tau - 1] = e.interval_len;
            }
        }
        Ok(())
    })
}

/// Monte Carlo calibration of lambda for a homogeneous interval of length `horizon`.
///
/// # Safety
/// `out_lambda` and `out_rate` must point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn lave_calibrate_lambda(
    gamma: f64,
    horizon: usize,
    m0: usize,
    alpha: f64,
    replications: usize,
    seed: u64,
    out_lambda: *mut f64,
    out_rate: *mut f64,
) -> LaveStatus {
    guard(|| {
        let l = out(out_lambda, "out_lambda")?;
        let rate = out(out_rate, "out_rate")?;
        let spec = CalibrationSpec::new(gamma, horizon, m0)
            .with_alpha(alpha)
            .with_replications(replications)
            .with_seed(seed);
        let res = calibrate_lambda(&spec)?;
        *l = res.lambda;
        *rate = res.achieved_rate;
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaveGarchParams {
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// Gaussian quasi maximum likelihood GARCH(1,1) fit. On a convergence
/// failure the best parameters found are still written.
///
/// # Safety
/// `returns` must hold `len` values; `out_params` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lave_garch_fit(
    returns: *const f64,
    len: usize,
    out_params: *mut LaveGarchParams,
) -> LaveStatus {
    guard(|| {
        let dst = out(out_params, "out_params")?;
        let r = ReturnSeries::new(slice(returns, len, "returns")?.to_vec())?;
        match garch_fit(&r, None) {
            Ok(p) => {
                *dst = LaveGarchParams {
                    omega: p.omega,
                    alpha: p.alpha,
                    beta: p.beta,
                };
                Ok(())
            }
            Err(LaveError::Convergence { iterations, best }) => {
                *dst = LaveGarchParams {
                    omega: best[0],
                    alpha: best[1],
                    beta: best[2],
                };
                Err(LaveError::Convergence { iterations, best }.into())
            }
            Err(e) => Err(e.into()),
        }
    })
}

/// Mean of `|returns[t]^2 - sigma_sq[i]|^p` where `t = origins[i]` is the
/// 1-based forecast origin.
///
/// # Safety
/// `returns` must hold `len` values; `origins` and `sigma_sq` must hold `count`.
#[no_mangle]
pub unsafe extern "C" fn lave_forecast_criterion(
    returns: *const f64,
    len: usize,
    origins: *const usize,
    sigma_sq: *const f64,
    count: usize,
    p: f64,
    out_value: *mut f64,
) -> LaveStatus {
    guard(|| {
        let dst = out(out_value, "out_value")?;
        let r = ReturnSeries::new(slice(returns, len, "returns")?.to_vec())?;
        let s = slice(sigma_sq, count, "sigma_sq")?;
        if count > 0 && origins.is_null() {
            return Err(Failure::Null("origins"));
        }
        let t = if count == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(origins, count)
        };
        let f: Vec<Forecast> = t
            .iter()
            .zip(s)
            .map(|(&t, &sigma_sq)| Forecast { t, sigma_sq })
            .collect();
        *dst = forecast_criterion(&r, &f, p)?;
        Ok(())
    })
}
