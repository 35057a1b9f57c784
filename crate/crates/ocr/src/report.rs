//! CSV emission for study reports, replication dumps and scatter data.
//! Floats use the shortest round-trip decimal, so equal inputs give equal
//! bytes.

use std::io::Write;

use ocr_core::simulation::{CalibrationScatter, MethodSummary, ReplicationRecord, ScenarioConfig, METHODS};

use crate::error::{CliError, Result};
use crate::runner::ScenarioResult;

pub const REPORT_HEADER: [&str; 21] = [
    "study",
    "n",
    "p",
    "sigma",
    "theta",
    "sigma_w",
    "intercept",
    "replications",
    "seed",
    "method",
    "mse_mean",
    "mse_sd",
    "slope_mean",
    "slope_sd",
    "intercept_mean",
    "intercept_sd",
    "theta_mean",
    "theta_sd",
    "bias",
    "bsr",
    "coverage_pct",
];

pub const DUMP_HEADER: [&str; 13] = [
    "study",
    "n",
    "p",
    "sigma",
    "replication",
    "method",
    "mse",
    "slope",
    "intercept",
    "theta_hat",
    "se_theta",
    "ci_covers",
    "seed",
];

pub const SCATTER_HEADER: [&str; 6] = ["method", "kind", "y", "yhat", "slope", "intercept"];

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

fn scenario_cells(cfg: &ScenarioConfig) -> Vec<String> {
    let downstream = cfg.study == ocr_core::simulation::Study::Downstream;
    vec![
        cfg.study.as_str().to_owned(),
        cfg.n.to_string(),
        cfg.p.to_string(),
        cfg.sigma.to_string(),
        if downstream { cfg.theta.to_string() } else { String::new() },
        if downstream { cfg.sigma_w.to_string() } else { String::new() },
        cfg.intercept.to_string(),
        cfg.replications.to_string(),
        cfg.base_seed.to_string(),
    ]
}

fn summary_cells(s: &MethodSummary) -> Vec<String> {
    let t = s.theta.as_ref();
    vec![
        s.method.as_str().to_owned(),
        s.mse.mean.to_string(),
        s.mse.sd.to_string(),
        s.slope.mean.to_string(),
        s.slope.sd.to_string(),
        s.intercept.mean.to_string(),
        s.intercept.sd.to_string(),
        opt(t.map(|t| t.estimate.mean)),
        opt(t.map(|t| t.estimate.sd)),
        opt(t.map(|t| t.bias)),
        opt(t.map(|t| t.bsr)),
        opt(t.map(|t| t.coverage_pct)),
    ]
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Csv { path: "<output>".into(), source: e }
}

/// One row per `(scenario, method)`.
pub fn write_report<W: Write>(out: W, results: &[ScenarioResult]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(REPORT_HEADER).map_err(csv_err)?;
    for r in results {
        for m in METHODS {
            let mut row = scenario_cells(&r.report.scenario);
            row.extend(summary_cells(r.report.method(m)));
            wtr.write_record(&row).map_err(csv_err)?;
        }
    }
    wtr.flush().map_err(|e| CliError::io("<output>", e))
}

/// One row per `(scenario, replication, method)`.
pub fn write_dump<W: Write>(out: W, results: &[ScenarioResult]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(DUMP_HEADER).map_err(csv_err)?;
    for r in results {
        let cfg = &r.report.scenario;
        for rec in &r.records {
            for m in METHODS {
                wtr.write_record(dump_row(cfg, rec, m)).map_err(csv_err)?;
            }
        }
    }
    wtr.flush().map_err(|e| CliError::io("<output>", e))
}

fn dump_row(cfg: &ScenarioConfig, rec: &ReplicationRecord, m: ocr_core::Method) -> Vec<String> {
    let mr = rec.method(m);
    vec![
        cfg.study.as_str().to_owned(),
        cfg.n.to_string(),
        cfg.p.to_string(),
        cfg.sigma.to_string(),
        rec.replication_index.to_string(),
        m.as_str().to_owned(),
        mr.mse.to_string(),
        mr.calibration.slope.to_string(),
        mr.calibration.intercept.to_string(),
        opt(mr.theta_hat),
        opt(mr.se_theta),
        mr.ci_covers.map_or_else(String::new, |c| c.to_string()),
        cfg.base_seed.to_string(),
    ]
}

/// Points, then the fitted calibration line, then the identity reference,
/// for each scatter in turn.
pub fn write_scatter<W: Write>(out: W, scatters: &[CalibrationScatter]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(SCATTER_HEADER).map_err(csv_err)?;
    for s in scatters {
        let m = s.method.as_str();
        for &(y, yhat) in &s.points {
            wtr.write_record([m, "point", &y.to_string(), &yhat.to_string(), "", ""]).map_err(csv_err)?;
        }
        wtr.write_record([m, "calibration_line", "", "", &s.line.slope.to_string(), &s.line.intercept.to_string()])
            .map_err(csv_err)?;
        wtr.write_record([m, "identity_line", "", "", "1", "0"]).map_err(csv_err)?;
    }
    wtr.flush().map_err(|e| CliError::io("<output>", e))
}
