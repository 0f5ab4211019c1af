// SPDX-License-Identifier: MIT OR Apache-2.0

//! Piecewise-constant volatility designs, truth-aware diagnostics and the
//! replicated change-point experiment.

use rayon::prelude::*;

use crate::calibration::PUBLISHED_LAMBDAS;
use crate::error::{LaveError, Result};
use crate::estimator::{estimate_path_transformed, EstimatePath, LaveConfig};
use crate::evaluation::quantile;
use crate::rng::{normal_draws, stream_rng};
use crate::transform::{power_moments, power_transform};
use crate::types::{PowerParams, ReturnSeries};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub len: usize,
    pub sigma: f64,
}

/// Volatility held at `sigma_k` over consecutive segments.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangePointSpec {
    pub segments: Vec<Segment>,
    pub seed: u64,
}

impl ChangePointSpec {
    pub fn new(segments: Vec<Segment>, seed: u64) -> Result<Self> {
        let spec = Self { segments, seed };
        spec.validate()?;
        Ok(spec)
    }

    /// Parses `len:sigma,len:sigma,...`.
    pub fn parse(text: &str, seed: u64) -> Result<Self> {
        let segments = text
            .split(',')
            .map(|part| {
                let (len, sigma) = part
                    .trim()
                    .split_once(':')
                    .ok_or_else(|| LaveError::domain(format!("segment '{part}' is not len:sigma")))?;
                let len = len
                    .trim()
                    .parse()
                    .map_err(|_| LaveError::domain(format!("bad segment length '{len}'")))?;
                let sigma = sigma
                    .trim()
                    .parse()
                    .map_err(|_| LaveError::domain(format!("bad segment sigma '{sigma}'")))?;
                Ok(Segment { len, sigma })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(segments, seed)
    }

    /// Three segments of 80 with volatility 1, `jump`, 1.
    pub fn three_segment(jump: f64, seed: u64) -> Self {
        Self::new(
            vec![
                Segment { len: 80, sigma: 1.0 },
                Segment { len: 80, sigma: jump },
                Segment { len: 80, sigma: 1.0 },
            ],
            seed,
        )
        .expect("valid preset")
    }

    /// 1500 points alternating between calm and turbulent regimes, long
    /// enough for a rolling GARCH window of 350.
    pub fn regime_switching(seed: u64) -> Self {
        let segments = [
            (300, 1.0),
            (150, 3.0),
            (200, 1.0),
            (100, 5.0),
            (250, 1.0),
            (150, 2.0),
            (350, 1.0),
        ]
        .into_iter()
        .map(|(len, sigma)| Segment { len, sigma })
        .collect();
        Self::new(segments, seed).expect("valid preset")
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(LaveError::size("a design needs at least one segment"));
        }
        for s in &self.segments {
            if s.len == 0 || !(s.sigma > 0.0 && s.sigma.is_finite()) {
                return Err(LaveError::domain(format!(
                    "segment ({}, {}) needs positive length and volatility",
                    s.len, s.sigma
                )));
            }
        }
        Ok(())
    }

    pub fn total_len(&self) -> usize {
        self.segments.iter().map(|s| s.len).sum()
    }

    /// Time points `t` (1-based) after which the volatility changes.
    pub fn change_points(&self) -> Vec<usize> {
        let mut acc = 0;
        let mut out = Vec::new();
        for s in &self.segments[..self.segments.len() - 1] {
            acc += s.len;
            out.push(acc);
        }
        out
    }

    pub fn sigma_path(&self) -> Vec<f64> {
        self.segments
            .iter()
            .flat_map(|s| std::iter::repeat_n(s.sigma, s.len))
            .collect()
    }

    pub fn to_text(&self) -> String {
        self.segments
            .iter()
            .map(|s| format!("{}:{}", s.len, s.sigma))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// `R_t = sigma_t xi_t` for replication `index` of the design.
pub fn generate_replication(spec: &ChangePointSpec, index: u64) -> (ReturnSeries, Vec<f64>) {
    let sigma = spec.sigma_path();
    let xi = normal_draws(&mut stream_rng(spec.seed, index), sigma.len());
    let r = xi.iter().zip(&sigma).map(|(x, s)| s * x).collect();
    (ReturnSeries::new(r).expect("finite draws"), sigma)
}

/// First replication of the design.
pub fn generate_change_point_series(spec: &ChangePointSpec) -> (ReturnSeries, Vec<f64>) {
    generate_replication(spec, 0)
}

/// Departure from homogeneity and conditional deviation of a window mean,
/// computed from the true volatility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthDiagnostics {
    pub delta_i: f64,
    pub v_i: f64,
    pub ratio: f64,
}

pub fn truth_diagnostics(sigma_true: &[f64], tau: usize, len: usize, params: &PowerParams) -> Result<TruthDiagnostics> {
    if !(len >= 1 && len <= tau && tau <= sigma_true.len()) {
        return Err(LaveError::domain(format!(
            "need 1 <= len ({len}) <= tau ({tau}) <= n ({})",
            sigma_true.len()
        )));
    }
    let theta: Vec<f64> = sigma_true[tau - len..tau]
        .iter()
        .map(|s| params.c_gamma * s.powf(params.gamma))
        .collect();
    let current = *theta.last().expect("len >= 1");
    let delta_i = theta.iter().map(|t| (t - current).abs()).fold(0.0, f64::max);
    let v_i = params.s_gamma / len as f64 * theta.iter().map(|t| t * t).sum::<f64>().sqrt();
    Ok(TruthDiagnostics {
        delta_i,
        v_i,
        ratio: delta_i / v_i,
    })
}

/// Sum over replications and over `t >= t_start` of `((sigma_hat - sigma) / sigma)^2`.
///
/// Both vectors of a pair are indexed by `t - 1`.
pub fn relative_error_criterion(paths: &[(&[f64], &[f64])], t_start: usize) -> Result<f64> {
    if paths.is_empty() {
        return Err(LaveError::size("no paths supplied"));
    }
    let mut total = 0.0;
    for (hat, truth) in paths {
        if hat.len() != truth.len() || t_start == 0 || t_start > truth.len() {
            return Err(LaveError::size(format!(
                "misaligned path (estimate {}, truth {}, start {t_start})",
                hat.len(),
                truth.len()
            )));
        }
        for (h, s) in hat[t_start - 1..].iter().zip(&truth[t_start - 1..]) {
            if !(*s > 0.0) {
                return Err(LaveError::domain("true volatility must be positive"));
            }
            if !h.is_finite() {
                return Err(LaveError::domain("missing estimate inside the evaluation range"));
            }
            total += ((h - s) / s).powi(2);
        }
    }
    Ok(total)
}

/// Smallest relative jump guaranteed detectable for `rho = lambda s / sqrt(min(m, m'))`.
pub fn detectability_bound(rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(LaveError::domain(format!("rho must lie in (0, 1), got {rho}")));
    }
    Ok((2.0 * rho + std::f64::consts::SQRT_2 * rho * (1.0 + rho)) / (1.0 - rho))
}

/// Steps after `t_cp` until the selected interval first has length `<= 2 m0`.
pub fn detection_delay(path: &EstimatePath, t_cp: usize) -> Option<usize> {
    let limit = 2 * path.config.m0;
    path.records
        .iter()
        .filter(|r| r.tau > t_cp)
        .find(|r| r.estimate.is_some_and(|e| e.interval_len <= limit))
        .map(|r| r.tau - t_cp)
}

/// Detection delays over `replications` draws of the design.
pub fn detection_delays(
    spec: &ChangePointSpec,
    t_cp: usize,
    config: &LaveConfig,
    replications: usize,
) -> Result<Vec<Option<usize>>> {
    let params = power_moments(config.gamma)?;
    (0..replications as u64)
        .into_par_iter()
        .map(|i| {
            let (r, _) = generate_replication(spec, i);
            let y = power_transform(&r, config.gamma)?;
            Ok(detection_delay(&estimate_path_transformed(&y, config, &params)?, t_cp))
        })
        .collect()
}

/// One `(gamma, lambda)` combination of the experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentCell {
    pub gamma: f64,
    pub lambda: f64,
    pub label: String,
}

/// The six published `(gamma, lambda)` pairs, labelled by their `M`.
pub fn reference_cells() -> Vec<ExperimentCell> {
    PUBLISHED_LAMBDAS
        .iter()
        .map(|&(gamma, m, lambda)| ExperimentCell {
            gamma,
            lambda,
            label: format!("M={m}"),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub design: ChangePointSpec,
    pub cells: Vec<ExperimentCell>,
    pub replications: usize,
    pub m0: usize,
    pub t0: usize,
}

/// Pointwise summary across replications at one time point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub t: usize,
    pub sigma_true: f64,
    pub sigma_median: f64,
    pub sigma_q25: f64,
    pub sigma_q75: f64,
    pub len_median: f64,
    pub len_q25: f64,
    pub len_q75: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    pub cell: ExperimentCell,
    pub error: f64,
    pub curves: Vec<CurvePoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub cells: Vec<CellOutcome>,
}

struct ReplicationPaths {
    // [cell][t - t0]
    sigma: Vec<Vec<f64>>,
    len: Vec<Vec<f64>>,
}

/// Replicates the design, estimates every cell on the same draws and
/// aggregates the relative error criterion and the quartile curves.
pub fn run_change_point_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.design.validate()?;
    if config.cells.is_empty() || config.replications == 0 {
        return Err(LaveError::size(
            "experiment needs at least one cell and one replication",
        ));
    }
    let n = config.design.total_len();
    if config.t0 < config.m0 || config.t0 > n {
        return Err(LaveError::domain(format!("t0 = {} outside [m0, n]", config.t0)));
    }
    let setups = config
        .cells
        .iter()
        .map(|c| {
            let cfg = LaveConfig::new(c.gamma, config.m0, c.lambda).with_t0(config.t0);
            cfg.validate()?;
            Ok((cfg, power_moments(c.gamma)?))
        })
        .collect::<Result<Vec<_>>>()?;

    let runs = (0..config.replications as u64)
        .into_par_iter()
        .map(|i| {
            let (r, _) = generate_replication(&config.design, i);
            let mut sigma = Vec::with_capacity(setups.len());
            let mut len = Vec::with_capacity(setups.len());
            for (cfg, params) in &setups {
                let y = power_transform(&r, cfg.gamma)?;
                let path = estimate_path_transformed(&y, cfg, params)?;
                sigma.push(
                    path.records
                        .iter()
                        .map(|rec| rec.estimate.map_or(f64::NAN, |e| e.sigma_hat))
                        .collect(),
                );
                len.push(
                    path.records
                        .iter()
                        .map(|rec| rec.estimate.map_or(f64::NAN, |e| e.interval_len as f64))
                        .collect(),
                );
            }
            Ok(ReplicationPaths { sigma, len })
        })
        .collect::<Result<Vec<_>>>()?;

    let truth = config.design.sigma_path();
    let truth_tail = &truth[config.t0 - 1..];
    let mut cells = Vec::with_capacity(config.cells.len());
    for (k, cell) in config.cells.iter().enumerate() {
        let pairs: Vec<(&[f64], &[f64])> = runs.iter().map(|run| (run.sigma[k].as_slice(), truth_tail)).collect();
        let error = relative_error_criterion(&pairs, 1)?;
        let curves = (0..truth_tail.len())
            .map(|j| {
                let mut s: Vec<f64> = runs.iter().map(|run| run.sigma[k][j]).collect();
                let mut l: Vec<f64> = runs.iter().map(|run| run.len[k][j]).collect();
                s.sort_by(f64::total_cmp);
                l.sort_by(f64::total_cmp);
                CurvePoint {
                    t: config.t0 + j,
                    sigma_true: truth_tail[j],
                    sigma_median: quantile(&s, 0.5),
                    sigma_q25: quantile(&s, 0.25),
                    sigma_q75: quantile(&s, 0.75),
                    len_median: quantile(&l, 0.5),
                    len_q25: quantile(&l, 0.25),
                    len_q75: quantile(&l, 0.75),
                }
            })
            .collect();
        cells.push(CellOutcome {
            cell: cell.clone(),
            error,
            curves,
        });
    }
    Ok(ExperimentReport {
        config: config.clone(),
        cells,
    })
}
