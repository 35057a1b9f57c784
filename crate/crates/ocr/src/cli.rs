//! Argument parsing and the five subcommands.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ocr_core::inference::{coef_ci, critical_value, standard_error, wald_test};
use ocr_core::simulation::{
    emit_calibration_scatter, factorial_grid, CalibrationScatter, ScenarioConfig, Study, METHODS,
};
use ocr_core::{fit, mean_response_ci, predict, prediction_interval, simple_regression, Method, OcrError};

use crate::config::{check_level, require, resolve_seed, FileConfig, DEFAULT_LEVEL, SEED_ENV};
use crate::csv_io::{read_csv, read_features, LoadedData};
use crate::error::{CliError, Result};
use crate::model_file::ModelFile;
use crate::report::{write_dump, write_report, write_scatter};
use crate::runner::{default_workers, run_grid, ScenarioResult};

#[derive(Debug, Parser)]
#[command(name = "ocr", version, about = "Outcome-calibrated least squares")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model and print the coefficient table.
    Fit(FitArgs),
    /// Point predictions, mean-response intervals and prediction intervals.
    Predict(PredictArgs),
    /// In-sample calibration of the fitted values.
    Calibrate(CalibrateArgs),
    /// Association of the predictions with an external variable.
    Downstream(DownstreamArgs),
    /// Monte Carlo study over a scenario grid.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Ols,
    Ocr,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Ols => Method::Ols,
            MethodArg::Ocr => Method::Ocr,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GridArg {
    /// Calibration study over the 2×2×2 grid.
    Table1,
    /// Downstream study over the same grid.
    Table2,
    /// `[[scenario]]` entries from `--config`.
    Custom,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub outcome: Option<String>,
    /// Prepend an all-ones column to the design.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub intercept: Option<bool>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long)]
    pub level: Option<f64>,
    #[arg(long)]
    pub model_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model_in: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Column to ignore in the new data.
    #[arg(long)]
    pub outcome: Option<String>,
    #[arg(long)]
    pub level: Option<f64>,
    /// Defaults to stdout.
    #[arg(long)]
    pub report_out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Both methods when omitted.
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long)]
    pub scatter_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DownstreamArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub w_column: Option<String>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long)]
    pub level: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub scenario_grid: Option<GridArg>,
    #[arg(long)]
    pub replications: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub level: Option<f64>,
    /// Fit with an all-ones column (default true).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub intercept: Option<bool>,
    /// Defaults to stdout.
    #[arg(long)]
    pub report_out: Option<PathBuf>,
    #[arg(long)]
    pub per_replication_dump: Option<PathBuf>,
    #[arg(long)]
    pub scatter_out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Parses `args` and runs the subcommand. Clap handles `--help` and usage
/// errors itself.
pub fn main_with<I, T>(args: I, out: &mut dyn Write) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).unwrap_or_else(|e| e.exit());
    run(cli.command, out)
}

pub fn run(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Fit(a) => cmd_fit(a, out),
        Command::Predict(a) => cmd_predict(a, out),
        Command::Calibrate(a) => cmd_calibrate(a, out),
        Command::Downstream(a) => cmd_downstream(a, out),
        Command::Simulate(a) => cmd_simulate(a, out),
    }
}

fn stdout_err(e: std::io::Error) -> CliError {
    CliError::io("<stdout>", e)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Six decimals, without a sign on zero.
fn fixed6(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".to_owned()
    } else {
        s
    }
}

fn parse_method(flag: Option<MethodArg>, file: Option<&str>) -> Result<Option<Method>> {
    match (flag, file) {
        (Some(m), _) => Ok(Some(m.into())),
        (None, Some(s)) => s.parse().map(Some).map_err(|_| CliError::Config(format!("unknown method `{s}`"))),
        (None, None) => Ok(None),
    }
}

struct Loaded {
    data: LoadedData,
    outcome: String,
    intercept: bool,
}

fn load_data(a: &DataArgs, file: &FileConfig, w_column: Option<&str>) -> Result<Loaded> {
    let input = require(a.input.clone().or_else(|| file.input.clone()), "input")?;
    let outcome = require(a.outcome.clone().or_else(|| file.outcome.clone()), "outcome")?;
    let intercept = a.intercept.or(file.intercept).unwrap_or(false);
    let data = read_csv(&input, &outcome, w_column, intercept)?;
    Ok(Loaded { data, outcome, intercept })
}

fn cmd_fit(a: FitArgs, out: &mut dyn Write) -> Result<()> {
    let file = FileConfig::load_optional(a.data.config.as_deref())?;
    let method = parse_method(a.method, file.method.as_deref())?.unwrap_or(Method::Ocr);
    let level = check_level(a.level.or(file.level).unwrap_or(DEFAULT_LEVEL))?;
    let model_out = a.model_out.or(file.model_out.clone());
    let loaded = load_data(&a.data, &file, None)?;
    let d = &loaded.data.dataset;
    let m = fit(d, method)?;
    let t = critical_value(m.residual_df, level)?;

    let mut text = String::new();
    text.push_str(&format!("method: {}\nn: {}  p: {}  residual df: {}\n", method, m.n, m.p, m.residual_df));
    text.push_str(&format!(
        "{:<16} {:>14} {:>14} {:>10} {:>12} {:>14} {:>14}\n",
        "coefficient", "estimate", "std_error", "t_value", "p_value", "ci_lower", "ci_upper"
    ));
    for (j, name) in loaded.data.columns.iter().enumerate() {
        let se = standard_error(&m, j)?;
        let ci = coef_ci(&m, j, level)?;
        let (tv, pv) = match wald_test(&m, j) {
            Ok(w) => (format!("{:.4}", w.statistic), format!("{:.4e}", w.p_value)),
            Err(OcrError::ZeroStandardError { .. }) => ("NA".to_owned(), "NA".to_owned()),
            Err(e) => return Err(e.into()),
        };
        text.push_str(&format!(
            "{:<16} {:>14.6} {:>14.6} {:>10} {:>12} {:>14.6} {:>14.6}\n",
            name, m.beta[j], se, tv, pv, ci.lower, ci.upper
        ));
    }
    text.push_str(&format!("confidence level: {level}  t critical: {t:.6}\n"));
    text.push_str(&format!("sigma2_hat: {:.6}\n", m.sigma2_hat));
    text.push_str(&format!("calibration slope: {}\n", fixed6(m.calibration.slope)));
    text.push_str(&format!("calibration intercept: {}\n", fixed6(m.calibration.intercept)));
    if m.diagnostics.fallback_kkt {
        text.push_str("note: ill-conditioned Gram matrix, solved the KKT system instead\n");
    }
    out.write_all(text.as_bytes()).map_err(stdout_err)?;

    if let Some(path) = model_out {
        ModelFile::from_model(&m, &loaded.data.columns, &loaded.outcome, loaded.intercept).save(&path)?;
    }
    Ok(())
}

fn cmd_predict(a: PredictArgs, out: &mut dyn Write) -> Result<()> {
    let file = FileConfig::load_optional(a.config.as_deref())?;
    let model_in = require(a.model_in.or(file.model_in.clone()), "model-in")?;
    let input = require(a.input.or(file.input.clone()), "input")?;
    let level = check_level(a.level.or(file.level).unwrap_or(DEFAULT_LEVEL))?;
    let report_out = a.report_out.or(file.report_out.clone());
    let mf = ModelFile::load(&model_in)?;
    let m = mf.to_model()?;
    let outcome = a.outcome.or(file.outcome.clone()).unwrap_or_else(|| mf.outcome.clone());
    let x = read_features(&input, &mf.columns, Some(&outcome))?;
    let points = predict(&m, &x)?;

    let mut wtr = csv::Writer::from_writer(Vec::new());
    let wrap = |source| CliError::Csv { path: "<predictions>".into(), source };
    wtr.write_record(["row", "prediction", "ci_lower", "ci_upper", "pi_lower", "pi_upper"]).map_err(wrap)?;
    for (i, point) in points.iter().enumerate() {
        let x0 = x.row(i);
        let ci = mean_response_ci(&m, x0, level)?;
        let pi = prediction_interval(&m, x0, level)?;
        let row = [
            (i + 1).to_string(),
            point.to_string(),
            ci.lower.to_string(),
            ci.upper.to_string(),
            pi.lower.to_string(),
            pi.upper.to_string(),
        ];
        wtr.write_record(&row).map_err(wrap)?;
    }
    let bytes = wtr.into_inner().expect("in-memory writer");
    match report_out {
        Some(path) => write_file(&path, &bytes),
        None => out.write_all(&bytes).map_err(stdout_err),
    }
}

fn cmd_calibrate(a: CalibrateArgs, out: &mut dyn Write) -> Result<()> {
    let file = FileConfig::load_optional(a.data.config.as_deref())?;
    let methods = match parse_method(a.method, file.method.as_deref())? {
        Some(m) => vec![m],
        None => METHODS.to_vec(),
    };
    let scatter_out = a.scatter_out.or(file.scatter_out.clone());
    let loaded = load_data(&a.data, &file, None)?;
    let d = &loaded.data.dataset;

    let mut text = format!("{:<8} {:>12} {:>12} {:>12}\n", "method", "slope", "intercept", "mse");
    let mut scatters = Vec::new();
    for m in methods {
        let fm = fit(d, m)?;
        let s = emit_calibration_scatter(&fm, d)?;
        let mse = fm.rss / d.n() as f64;
        text.push_str(&format!(
            "{:<8} {:>12} {:>12} {:>12.6}\n",
            m,
            fixed6(s.line.slope),
            fixed6(s.line.intercept),
            mse
        ));
        scatters.push(s);
    }
    out.write_all(text.as_bytes()).map_err(stdout_err)?;
    if let Some(path) = scatter_out {
        let mut buf = Vec::new();
        write_scatter(&mut buf, &scatters)?;
        write_file(&path, &buf)?;
    }
    Ok(())
}

fn cmd_downstream(a: DownstreamArgs, out: &mut dyn Write) -> Result<()> {
    let file = FileConfig::load_optional(a.data.config.as_deref())?;
    let method = parse_method(a.method, file.method.as_deref())?.unwrap_or(Method::Ocr);
    let level = check_level(a.level.or(file.level).unwrap_or(DEFAULT_LEVEL))?;
    let w_column = require(a.w_column.or(file.w_column.clone()), "w-column")?;
    let loaded = load_data(&a.data, &file, Some(&w_column))?;
    let d = &loaded.data.dataset;
    let w = loaded.data.w.as_deref().expect("w column requested");

    let m = fit(d, method)?;
    let yhat = predict(&m, d.x())?;
    let predicted = simple_regression(&yhat, w, level)?;
    let direct = simple_regression(d.y(), w, level)?;

    let mut text =
        format!("{:<18} {:>14} {:>14} {:>14} {:>14}\n", "regression", "theta_hat", "std_error", "ci_lower", "ci_upper");
    for (label, e) in [(format!("{method} fitted on w"), predicted), ("y on w".to_owned(), direct)] {
        text.push_str(&format!(
            "{:<18} {:>14.6} {:>14.6} {:>14.6} {:>14.6}\n",
            label, e.theta_hat, e.se, e.ci.lower, e.ci.upper
        ));
    }
    text.push_str(&format!("confidence level: {level}\n"));
    text.push_str(&format!("eta_hat (theta ratio): {:.6}\n", predicted.theta_hat / direct.theta_hat));
    text.push_str(&format!("calibration slope: {}\n", fixed6(m.calibration.slope)));
    out.write_all(text.as_bytes()).map_err(stdout_err)
}

/// The representative draw for scatter output: the scenario at
/// `(n, p, σ) = (500, 2, 0.5)` if the grid has one, else the first, at
/// replication 0.
fn representative_scatter(grid: &[ScenarioConfig]) -> Result<Vec<CalibrationScatter>> {
    let cfg = grid
        .iter()
        .find(|c| c.n == 500 && c.p == 2 && c.sigma == 0.5)
        .or_else(|| grid.first())
        .ok_or_else(|| CliError::Config("empty scenario grid".into()))?;
    let d = scenario_design(cfg)?;
    METHODS.iter().map(|&m| Ok(emit_calibration_scatter(&fit(&d, m)?, &d)?)).collect()
}

fn scenario_design(cfg: &ScenarioConfig) -> Result<ocr_core::Dataset> {
    let mut rs = cfg.random_source(0);
    let d = match cfg.study {
        Study::Calibration => ocr_core::simulation::dgp_linear(cfg, &mut rs)?,
        Study::Downstream => ocr_core::simulation::dgp_downstream(cfg, &mut rs)?.0,
    };
    Ok(cfg.model_design(d)?)
}

pub fn build_grid(a: &SimulateArgs, file: &FileConfig, env_seed: Option<&str>) -> Result<Vec<ScenarioConfig>> {
    let seed = resolve_seed(a.seed, file.seed, env_seed)?;
    let reps = a.replications.or(file.replications).unwrap_or(ocr_core::simulation::DEFAULT_REPLICATIONS);
    if reps == 0 {
        return Err(CliError::Config("--replications must be at least 1".into()));
    }
    let level = check_level(a.level.or(file.level).unwrap_or(DEFAULT_LEVEL))?;
    let intercept = a.intercept.or(file.intercept).unwrap_or(true);
    let grid_kind = match (a.scenario_grid, file.scenario_grid.as_deref()) {
        (Some(g), _) => g,
        (None, Some(s)) => {
            GridArg::from_str(s, true).map_err(|_| CliError::Config(format!("unknown scenario grid `{s}`")))?
        }
        (None, None) => GridArg::Table1,
    };
    let mut grid = match grid_kind {
        GridArg::Table1 => factorial_grid(Study::Calibration, reps, seed),
        GridArg::Table2 => factorial_grid(Study::Downstream, reps, seed),
        GridArg::Custom => {
            if file.scenario.is_empty() {
                return Err(CliError::Config("custom grid needs [[scenario]] entries in --config".into()));
            }
            file.scenario.iter().map(|s| s.to_scenario(reps, seed)).collect::<Result<_>>()?
        }
    };
    for cfg in &mut grid {
        cfg.level = level;
        cfg.intercept = intercept;
    }
    Ok(grid)
}

fn cmd_simulate(a: SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let file = FileConfig::load_optional(a.config.as_deref())?;
    let env_seed = std::env::var(SEED_ENV).ok();
    let grid = build_grid(&a, &file, env_seed.as_deref())?;
    let workers = a.workers.or(file.workers).unwrap_or_else(default_workers);
    let report_out = a.report_out.clone().or(file.report_out.clone());
    let dump = a.per_replication_dump.clone().or(file.per_replication_dump.clone());
    let scatter_out = a.scatter_out.clone().or(file.scatter_out.clone());

    let results: Vec<ScenarioResult> = run_grid(&grid, workers)?;
    let mut buf = Vec::new();
    write_report(&mut buf, &results)?;
    match report_out {
        Some(path) => write_file(&path, &buf)?,
        None => out.write_all(&buf).map_err(stdout_err)?,
    }
    if let Some(path) = dump {
        let mut buf = Vec::new();
        write_dump(&mut buf, &results)?;
        write_file(&path, &buf)?;
    }
    if let Some(path) = scatter_out {
        let mut buf = Vec::new();
        write_scatter(&mut buf, &representative_scatter(&grid)?)?;
        write_file(&path, &buf)?;
    }
    Ok(())
}
