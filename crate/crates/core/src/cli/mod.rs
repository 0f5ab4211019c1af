// SPDX-License-Identifier: MIT OR Apache-2.0

//! The `lave` command line: argument model, dispatch and exit codes.

pub mod ingest;
pub mod output;

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::calibration::{
    calibrate_lambda, published_lambda, CalibrationSpec, DEFAULT_ALPHA, DEFAULT_REPLICATIONS, DEFAULT_SEED,
    PUBLISHED_LAMBDAS,
};
use crate::error::LaveError;
use crate::estimator::{estimate_path, LaveConfig};
use crate::evaluation::{
    acf, compare_forecast_sets, lave_forecasts, standardized_returns, summary_stats, Forecast, DEFAULT_P,
};
use crate::garch::{rolling_forecast_with, RollingConfig, GARCH_WINDOW};
use crate::simulation::{
    generate_replication, run_change_point_experiment, ChangePointSpec, ExperimentCell, ExperimentConfig,
};
use crate::transform::{
    geometric_grid, laplace_curve, power_constants, A_GAMMA_GRID_POINTS, A_GAMMA_U_MAX, A_GAMMA_U_MIN,
};
use crate::types::ReturnSeries;
use ingest::ingest_csv;
use output::{num, write_csv, Header};

/// Horizon used when no `--lambda` or `--auto-M` is given.
pub const DEFAULT_HORIZON: usize = 80;
/// Replications of `simulate` when `--reps` is absent.
pub const DEFAULT_SIMULATION_REPS: usize = 500;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Lave(#[from] LaveError),
    #[error("{0}: {1}")]
    Io(String, String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Lave(e) => e.kind(),
            CliError::Io(..) => "io",
            CliError::Input(_) => "input",
            CliError::Usage(_) => "usage",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "usage" => 2,
            "domain" => 3,
            "size" => 4,
            "degenerate_window" => 5,
            "insufficient_data" => 6,
            "divergence" => 7,
            "unsupported" => 8,
            "bracket" => 9,
            "convergence" => 10,
            "numeric" => 11,
            "io" => 12,
            _ => 13,
        }
    }
}

/// `--lambda` value: a number, `auto:M` (calibrate for length M) or
/// `paper:M` (published value for length M).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaChoice {
    Value(f64),
    Auto(usize),
    Paper(usize),
}

impl FromStr for LambdaChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let horizon = |m: &str| m.parse::<usize>().map_err(|_| format!("bad horizon in '{s}'"));
        if let Some(m) = s.strip_prefix("auto:") {
            return Ok(LambdaChoice::Auto(horizon(m)?));
        }
        if let Some(m) = s.strip_prefix("paper:") {
            return Ok(LambdaChoice::Paper(horizon(m)?));
        }
        match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(LambdaChoice::Value(v)),
            _ => Err(format!("expected a positive number, auto:M or paper:M, got '{s}'")),
        }
    }
}

impl fmt::Display for LambdaChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaChoice::Value(v) => write!(f, "{v}"),
            LambdaChoice::Auto(m) => write!(f, "auto:{m}"),
            LambdaChoice::Paper(m) => write!(f, "paper:{m}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Design {
    /// Both three-segment designs (jumps to 3 and to 5).
    #[value(name = "paper-63")]
    Paper63,
    #[value(name = "paper-63-small")]
    Paper63Small,
    #[value(name = "paper-63-large")]
    Paper63Large,
    /// 1500 points of alternating regimes.
    Regimes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GammaGrid {
    /// gamma in {0.5, 1, 2} crossed with M in {80, 40}.
    Paper,
}

#[derive(Parser, Debug, Clone, PartialEq)]
#[command(name = "lave", version, about = "Locally adaptive volatility estimation")]
pub struct Cli {
    #[command(flatten)]
    pub config: RunConfig,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Power of the transformation |R|^gamma.
    #[arg(long, global = true, default_value_t = 0.5, allow_negative_numbers = true)]
    pub gamma: f64,
    /// Grid step and shortest interval.
    #[arg(long, global = true, default_value_t = 10)]
    pub m0: usize,
    /// Threshold: a number, auto:M or paper:M [default: auto:80].
    #[arg(long, global = true, conflicts_with = "auto_m")]
    pub lambda: Option<LambdaChoice>,
    /// Same as --lambda auto:M.
    #[arg(long = "auto-M", global = true)]
    pub auto_m: Option<usize>,
    /// First estimation time [default: 2 m0].
    #[arg(long, global = true)]
    pub t0: Option<usize>,
    #[arg(long, global = true, env = "LAVE_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Monte Carlo replications (calibrate: 2000, simulate: 500, backtest: 1).
    #[arg(long, global = true)]
    pub reps: Option<usize>,
    /// Rolling GARCH window.
    #[arg(long, global = true, default_value_t = GARCH_WINDOW)]
    pub window: usize,
    /// Exponent of the forecast criterion.
    #[arg(long, global = true, default_value_t = DEFAULT_P, allow_negative_numbers = true)]
    pub p: f64,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Omit the timestamp from output headers.
    #[arg(long, global = true)]
    pub deterministic: bool,
    /// Worker threads [default: all cores].
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Input CSV with a price or return column; repeatable.
    #[arg(long, global = true)]
    pub input: Vec<PathBuf>,
    /// Simulated design used when no input is given.
    #[arg(long, global = true, value_enum, conflicts_with = "segments")]
    pub design: Option<Design>,
    /// Custom simulated design as len:sigma,len:sigma,...
    #[arg(long, global = true)]
    pub segments: Option<String>,
    /// Run the published (gamma, lambda) grid instead of a single cell.
    #[arg(long = "gamma-grid", global = true, value_enum)]
    pub gamma_grid: Option<GammaGrid>,
}

#[derive(Subcommand, Debug, Clone, PartialEq)]
pub enum Command {
    /// Moment constants, a_gamma and the Laplace-ratio curve.
    Constants(ConstantsArgs),
    /// Monte Carlo calibration of lambda.
    Calibrate(CalibrateArgs),
    /// Volatility path of one series.
    Estimate,
    /// Replicated change-point experiment.
    Simulate,
    /// LAVE against rolling GARCH(1,1) forecasts.
    Backtest(BacktestArgs),
    /// Moment summary of each series.
    Stats,
    /// Autocorrelations of |R| before and after standardization.
    Acf(AcfArgs),
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct ConstantsArgs {
    #[arg(long, default_value_t = A_GAMMA_U_MIN)]
    pub u_min: f64,
    #[arg(long, default_value_t = A_GAMMA_U_MAX)]
    pub u_max: f64,
    #[arg(long, default_value_t = A_GAMMA_GRID_POINTS)]
    pub points: usize,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct CalibrateArgs {
    /// Length of the homogeneous interval [default: from --auto-M or --lambda, else 80].
    #[arg(long = "M")]
    pub horizon: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct BacktestArgs {
    /// Fit every window from the default start, in parallel.
    #[arg(long)]
    pub cold_start: bool,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct AcfArgs {
    #[arg(long, default_value_t = 50)]
    pub max_lag: usize,
}

impl Cli {
    /// Explicit argument vector that parses back to `self`.
    pub fn canonical_args(&self) -> Vec<String> {
        let mut a: Vec<String> = vec!["lave".into()];
        let mut push = |k: &str, v: String| {
            a.push(k.to_string());
            a.push(v);
        };
        let c = &self.config;
        match &self.command {
            Command::Constants(x) => {
                push("constants", String::new());
                push("--u-min", x.u_min.to_string());
                push("--u-max", x.u_max.to_string());
                push("--points", x.points.to_string());
            }
            Command::Calibrate(x) => {
                push("calibrate", String::new());
                if let Some(m) = x.horizon {
                    push("--M", m.to_string());
                }
                push("--alpha", x.alpha.to_string());
            }
            Command::Estimate => push("estimate", String::new()),
            Command::Simulate => push("simulate", String::new()),
            Command::Backtest(x) => {
                push("backtest", String::new());
                if x.cold_start {
                    push("--cold-start", String::new());
                }
            }
            Command::Stats => push("stats", String::new()),
            Command::Acf(x) => {
                push("acf", String::new());
                push("--max-lag", x.max_lag.to_string());
            }
        }
        push("--gamma", c.gamma.to_string());
        push("--m0", c.m0.to_string());
        if let Some(l) = c.lambda {
            push("--lambda", l.to_string());
        }
        if let Some(m) = c.auto_m {
            push("--auto-M", m.to_string());
        }
        if let Some(t) = c.t0 {
            push("--t0", t.to_string());
        }
        push("--seed", c.seed.to_string());
        if let Some(r) = c.reps {
            push("--reps", r.to_string());
        }
        push("--window", c.window.to_string());
        push("--p", c.p.to_string());
        push("--out", c.out.display().to_string());
        if c.deterministic {
            push("--deterministic", String::new());
        }
        if let Some(w) = c.workers {
            push("--workers", w.to_string());
        }
        for i in &c.input {
            push("--input", i.display().to_string());
        }
        if let Some(d) = c.design {
            push("--design", d.to_possible_value().expect("named").get_name().to_string());
        }
        if let Some(s) = &c.segments {
            push("--segments", s.clone());
        }
        if let Some(g) = c.gamma_grid {
            push(
                "--gamma-grid",
                g.to_possible_value().expect("named").get_name().to_string(),
            );
        }
        a.retain(|s| !s.is_empty());
        a
    }

    fn header(&self, notes: Vec<String>) -> Header {
        Header {
            args: self.canonical_args(),
            seed: self.config.seed,
            deterministic: self.config.deterministic,
            notes,
        }
    }
}

/// A series to process, read from disk or simulated.
#[derive(Debug, Clone)]
pub struct Source {
    pub label: String,
    pub series: ReturnSeries,
    pub dates: Option<Vec<String>>,
}

impl RunConfig {
    fn lambda_choice(&self) -> LambdaChoice {
        match self.auto_m {
            Some(m) => LambdaChoice::Auto(m),
            None => self.lambda.unwrap_or(LambdaChoice::Auto(DEFAULT_HORIZON)),
        }
    }

    fn resolve_lambda(&self, gamma: f64) -> Result<(f64, String), CliError> {
        match self.lambda_choice() {
            LambdaChoice::Value(v) => Ok((v, format!("lambda={v}"))),
            LambdaChoice::Paper(m) => published_lambda(gamma, m)
                .map(|l| (l, format!("M={m}")))
                .ok_or_else(|| {
                    LaveError::Unsupported(format!("no published lambda for gamma = {gamma}, M = {m}")).into()
                }),
            LambdaChoice::Auto(m) => {
                let spec = CalibrationSpec::new(gamma, m, self.m0)
                    .with_seed(self.seed)
                    .with_replications(DEFAULT_REPLICATIONS);
                let res = calibrate_lambda(&spec)?;
                log::info!("calibrated lambda = {} for gamma = {gamma}, M = {m}", res.lambda);
                Ok((res.lambda, format!("M={m}")))
            }
        }
    }

    fn cells(&self) -> Result<Vec<ExperimentCell>, CliError> {
        match self.gamma_grid {
            Some(GammaGrid::Paper) => Ok(PUBLISHED_LAMBDAS
                .iter()
                .map(|&(gamma, m, lambda)| ExperimentCell {
                    gamma,
                    lambda,
                    label: format!("M={m}"),
                })
                .collect()),
            None => {
                let (lambda, label) = self.resolve_lambda(self.gamma)?;
                Ok(vec![ExperimentCell {
                    gamma: self.gamma,
                    lambda,
                    label,
                }])
            }
        }
    }

    fn lave_config(&self, cell: &ExperimentCell) -> LaveConfig {
        let cfg = LaveConfig::new(cell.gamma, self.m0, cell.lambda);
        match self.t0 {
            Some(t) => cfg.with_t0(t),
            None => cfg,
        }
    }

    fn designs(&self, fallback: Option<Design>) -> Result<Vec<(String, ChangePointSpec)>, CliError> {
        if let Some(s) = &self.segments {
            return Ok(vec![("custom".into(), ChangePointSpec::parse(s, self.seed)?)]);
        }
        let small = || ("small_jump".to_string(), ChangePointSpec::three_segment(3.0, self.seed));
        let large = || ("large_jump".to_string(), ChangePointSpec::three_segment(5.0, self.seed));
        Ok(match self.design.or(fallback) {
            Some(Design::Paper63) => vec![small(), large()],
            Some(Design::Paper63Small) => vec![small()],
            Some(Design::Paper63Large) => vec![large()],
            Some(Design::Regimes) => vec![("regimes".into(), ChangePointSpec::regime_switching(self.seed))],
            None => return Err(CliError::Usage("no data: pass --input, --design or --segments".into())),
        })
    }

    fn sources(&self, replications: usize) -> Result<Vec<Source>, CliError> {
        if !self.input.is_empty() {
            return self
                .input
                .iter()
                .map(|p| {
                    let got = ingest_csv(p)?;
                    let label = got.series.label().unwrap_or("input").to_string();
                    Ok(Source {
                        label,
                        series: got.series,
                        dates: got.dates,
                    })
                })
                .collect();
        }
        let mut out = Vec::new();
        for (name, spec) in self.designs(None)? {
            for i in 0..replications as u64 {
                let (series, _) = generate_replication(&spec, i);
                let label = if replications == 1 {
                    name.clone()
                } else {
                    format!("{name}_{i}")
                };
                out.push(Source {
                    label: label.clone(),
                    series: series.with_label(label),
                    dates: None,
                });
            }
        }
        Ok(out)
    }

    fn single_source(&self) -> Result<Source, CliError> {
        let mut s = self.sources(1)?;
        if s.len() != 1 {
            return Err(CliError::Usage(format!(
                "this command takes one series, got {}",
                s.len()
            )));
        }
        Ok(s.remove(0))
    }
}

fn cell_notes(cells: &[ExperimentCell]) -> Vec<String> {
    cells
        .iter()
        .map(|c| format!("cell: gamma={} lambda={} {}", c.gamma, c.lambda, c.label))
        .collect()
}

fn cmd_constants(cli: &Cli, x: &ConstantsArgs) -> Result<Vec<PathBuf>, CliError> {
    let c = &cli.config;
    let gammas: Vec<f64> = match c.gamma_grid {
        Some(GammaGrid::Paper) => vec![0.5, 1.0, 2.0],
        None => vec![c.gamma],
    };
    let grid = geometric_grid(x.u_min, x.u_max, x.points);
    let mut rows = Vec::new();
    let mut curve = Vec::new();
    for &g in &gammas {
        let p = power_constants(g)?;
        rows.push(vec![
            num(g),
            num(p.c_gamma),
            num(p.d_gamma),
            num(p.s_gamma),
            p.a_gamma.map_or(String::new(), num),
        ]);
        match laplace_curve(&p, &grid) {
            Ok(lc) => curve.extend(
                lc.u_grid
                    .iter()
                    .zip(&lc.ratio)
                    .map(|(u, r)| vec![num(*u), num(*r), num(g)]),
            ),
            Err(e) => log::warn!("no Laplace curve for gamma = {g}: {e}"),
        }
    }
    let h = cli.header(vec![]);
    Ok(vec![
        write_csv(
            &c.out.join("constants.csv"),
            &h,
            &["gamma", "c_gamma", "d_gamma", "s_gamma", "a_gamma"],
            rows,
        )?,
        write_csv(&c.out.join("laplace_curve.csv"), &h, &["u", "ratio", "gamma"], curve)?,
    ])
}

fn cmd_calibrate(cli: &Cli, x: &CalibrateArgs) -> Result<Vec<PathBuf>, CliError> {
    let c = &cli.config;
    let horizon = x.horizon.unwrap_or(match c.lambda_choice() {
        LambdaChoice::Auto(m) | LambdaChoice::Paper(m) => m,
        LambdaChoice::Value(_) => DEFAULT_HORIZON,
    });
    let cells: Vec<(f64, usize)> = match c.gamma_grid {
        Some(GammaGrid::Paper) => PUBLISHED_LAMBDAS.iter().map(|&(g, m, _)| (g, m)).collect(),
        None => vec![(c.gamma, horizon)],
    };
    let reps = c.reps.unwrap_or(DEFAULT_REPLICATIONS);
    let mut rows = Vec::new();
    for (g, m) in cells {
        let spec = CalibrationSpec::new(g, m, c.m0)
            .with_alpha(x.alpha)
            .with_replications(reps)
            .with_seed(c.seed);
        let r = calibrate_lambda(&spec)?;
        rows.push(vec![
            num(g),
            m.to_string(),
            c.m0.to_string(),
            num(x.alpha),
            num(r.lambda),
            num(r.achieved_rate),
            r.replications.to_string(),
            c.seed.to_string(),
        ]);
    }
    Ok(vec![write_csv(
        &c.out.join("calibration.csv"),
        &cli.header(vec![]),
        &[
            "gamma",
            "M",
            "m0",
            "alpha",
            "lambda",
            "achieved_rate",
            "replications",
            "seed",
        ],
        rows,
    )?])
}

fn cmd_estimate(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let c = &cli.config;
    let src = c.single_source()?;
    let cell = c.cells()?.remove(0);
    let cfg = c.lave_config(&cell);
    let path = estimate_path(&src.series, &cfg)?;
    if path.flagged_count() > 0 {
        log::warn!(
            "{} time points carried forward over degenerate windows",
            path.flagged_count()
        );
    }
    let mut cols = vec!["t", "sigma_hat", "interval_len"];
    if src.dates.is_some() {
        cols.push("date");
    }
    let rows: Vec<Vec<String>> = path
        .records
        .iter()
        .filter_map(|r| {
            let e = r.estimate?;
            let mut row = vec![r.tau.to_string(), num(e.sigma_hat), e.interval_len.to_string()];
            if let Some(d) = &src.dates {
                row.push(d[r.tau - 1].clone());
            }
            Some(row)
        })
        .collect();
    let notes = vec![
        format!("series: {}", src.label),
        format!("lambda: {} ({})", cell.lambda, cell.label),
    ];
    Ok(vec![write_csv(
        &c.out.join("estimate.csv"),
        &cli.header(notes),
        &cols,
        rows,
    )?])
}

fn cmd_simulate(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let c = &cli.config;
    let designs = c.designs(Some(Design::Paper63))?;
    let cells = c.cells()?;
    let mut written = Vec::new();
    for (name, spec) in &designs {
        let dir = if designs.len() > 1 {
            c.out.join(name)
        } else {
            c.out.clone()
        };
        let config = ExperimentConfig {
            design: spec.clone(),
            cells: cells.clone(),
            replications: c.reps.unwrap_or(DEFAULT_SIMULATION_REPS),
            m0: c.m0,
            t0: c.t0.unwrap_or(2 * c.m0),
        };
        let report = run_change_point_experiment(&config)?;
        let mut notes = vec![format!("design: {name} {}", spec.to_text())];
        notes.extend(cell_notes(&cells));
        let h = cli.header(notes);
        let errors = report.cells.iter().map(|o| {
            vec![
                num(o.cell.gamma),
                num(o.cell.lambda),
                o.cell.label.clone(),
                num(o.error),
            ]
        });
        written.push(write_csv(
            &dir.join("errors.csv"),
            &h,
            &["gamma", "lambda", "M_label", "error"],
            errors,
        )?);
        let curves = report.cells.iter().flat_map(|o| {
            o.curves.iter().map(move |p| {
                vec![
                    p.t.to_string(),
                    num(p.sigma_true),
                    num(p.sigma_median),
                    num(p.sigma_q25),
                    num(p.sigma_q75),
                    num(p.len_median),
                    num(p.len_q25),
                    num(p.len_q75),
                    num(o.cell.gamma),
                    num(o.cell.lambda),
                    o.cell.label.clone(),
                ]
            })
        });
        written.push(write_csv(
            &dir.join("curves.csv"),
            &h,
            &[
                "t",
                "sigma_true",
                "sigma_hat_median",
                "q25",
                "q75",
                "len_median",
                "len_q25",
                "len_q75",
                "gamma",
                "lambda",
                "M_label",
            ],
            curves,
        )?);
    }
    Ok(written)
}

fn cmd_backtest(cli: &Cli, x: &BacktestArgs) -> Result<Vec<PathBuf>, CliError> {
    let c = &cli.config;
    let cells = c.cells()?;
    let sources = c.sources(c.reps.unwrap_or(1))?;
    let rolling = RollingConfig {
        window: c.window,
        warm_start: !x.cold_start,
    };
    let results = sources
        .par_iter()
        .map(|src| {
            let garch: Vec<Forecast> = rolling_forecast_with(&src.series, rolling)?
                .forecasts
                .iter()
                .map(|f| Forecast {
                    t: f.t,
                    sigma_sq: f.sigma_sq,
                })
                .collect();
            let lave = cells
                .iter()
                .map(|cell| lave_forecasts(&src.series, &c.lave_config(cell)))
                .collect::<crate::Result<Vec<_>>>()?;
            let ratios = lave
                .iter()
                .map(|l| compare_forecast_sets(&src.series, l, &garch, c.p).map(|r| r.ratio))
                .collect::<crate::Result<Vec<_>>>()?;
            Ok((garch, lave, ratios))
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let mut notes = cell_notes(&cells);
    notes.push(format!("garch window: {} warm start: {}", c.window, rolling.warm_start));
    let h = cli.header(notes);
    let mut written = Vec::new();
    let mut table = Vec::new();
    for (src, (garch, lave, ratios)) in sources.iter().zip(&results) {
        for (cell, ratio) in cells.iter().zip(ratios) {
            table.push(vec![
                src.label.clone(),
                num(cell.gamma),
                cell.label.clone(),
                num(*ratio),
            ]);
        }
        let mut cols = vec!["t".to_string(), "realized_sq".to_string(), "garch".to_string()];
        cols.extend(cells.iter().map(|cell| format!("lave_{}_{}", cell.gamma, cell.label)));
        let lookup: Vec<std::collections::BTreeMap<usize, f64>> = lave
            .iter()
            .map(|l| l.iter().map(|f| (f.t, f.sigma_sq)).collect())
            .collect();
        let v = src.series.values();
        let rows = garch.iter().map(|g| {
            let mut row = vec![g.t.to_string(), num(v[g.t] * v[g.t]), num(g.sigma_sq)];
            row.extend(lookup.iter().map(|m| m.get(&g.t).map_or(String::new(), |s| num(*s))));
            row
        });
        let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
        written.push(write_csv(
            &c.out.join(format!("forecasts_{}.csv", src.label)),
            &h,
            &col_refs,
            rows,
        )?);
    }
    written.insert(
        0,
        write_csv(
            &c.out.join("backtest.csv"),
            &h,
            &["label", "gamma", "M_label", "ratio"],
            table,
        )?,
    );
    Ok(written)
}

fn cmd_stats(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let c = &cli.config;
    let rows = c
        .sources(c.reps.unwrap_or(1))?
        .iter()
        .map(|s| {
            let m = summary_stats(s.series.values())?;
            Ok(vec![
                s.label.clone(),
                m.n.to_string(),
                num(m.mean),
                num(m.variance),
                num(m.skewness),
                num(m.kurtosis),
            ])
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let h = cli.header(vec!["moments: population central moments, kurtosis not excess".into()]);
    Ok(vec![write_csv(
        &c.out.join("stats.csv"),
        &h,
        &["label", "n", "mean", "variance", "skewness", "kurtosis"],
        rows,
    )?])
}

fn cmd_acf(cli: &Cli, x: &AcfArgs) -> Result<Vec<PathBuf>, CliError> {
    let c = &cli.config;
    let src = c.single_source()?;
    let cell = c.cells()?.remove(0);
    let path = estimate_path(&src.series, &c.lave_config(&cell))?;
    let abs: Vec<f64> = src.series.values().iter().map(|v| v.abs()).collect();
    let std: Vec<f64> = standardized_returns(&src.series, &path.sigma_series(src.series.len()))?
        .iter()
        .map(|v| v.abs())
        .collect();
    let mut written = Vec::new();
    for (name, data) in [("acf_raw.csv", &abs), ("acf_standardized.csv", &std)] {
        let a = acf(data, x.max_lag)?;
        let notes = vec![
            format!("series: {} n={}", src.label, data.len()),
            format!("band: {}", 3.0 / (data.len() as f64).sqrt()),
        ];
        let rows = a.iter().enumerate().map(|(k, v)| vec![k.to_string(), num(*v)]);
        written.push(write_csv(
            &c.out.join(name),
            &cli.header(notes),
            &["lag", "value"],
            rows,
        )?);
    }
    Ok(written)
}

/// Runs the parsed command and returns the files written.
pub fn dispatch(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    match &cli.command {
        Command::Constants(x) => cmd_constants(cli, x),
        Command::Calibrate(x) => cmd_calibrate(cli, x),
        Command::Estimate => cmd_estimate(cli),
        Command::Simulate => cmd_simulate(cli),
        Command::Backtest(x) => cmd_backtest(cli, x),
        Command::Stats => cmd_stats(cli),
        Command::Acf(x) => cmd_acf(cli, x),
    }
}

/// One-line error report: `error: code=<n> kind=<kind> message="<text>"`.
pub fn error_line(e: &CliError) -> String {
    format!(
        "error: code={} kind={} message={:?}",
        e.exit_code(),
        e.kind(),
        e.to_string()
    )
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let _ = e.print();
            let err = CliError::Usage(e.kind().to_string());
            eprintln!("{}", error_line(&err));
            return err.exit_code();
        }
    };
    if let Some(n) = cli.config.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("worker pool already configured: {e}");
        }
    }
    match dispatch(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("{}", error_line(&e));
            e.exit_code()
        }
    }
}

/// Parses a previously written file's args header back into a [`Cli`].
pub fn parse_header(path: &Path) -> Result<Cli, CliError> {
    let args = output::read_args_header(path)?;
    Cli::try_parse_from(args).map_err(|e| CliError::Usage(e.to_string()))
}
