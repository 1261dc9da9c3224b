//! Report writers: forecast shares, evaluation tables and plot-ready
//! long-format series. Everything is written with sorted keys and fixed
//! float formatting so identical inputs produce identical bytes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use sbs_core::forecast::{EvalReport, ForecastShare};
use sbs_core::ingest::WeekWindow;
use sbs_core::sbs::{format_float, SbsTable, WeekEntry};

use crate::config::ReportParameters;
use crate::CliError;

fn write_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::compute(format!("cannot write {}: {e}", path.display()))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::compute(format!("cannot write {}: {e}", path.display()))
}

/// Percent with four decimals: the only place shares leave fraction form.
fn pct(fraction: f64) -> String {
    format!("{:.4}", fraction * 100.0)
}

fn pp(points: f64) -> String {
    format!("{points:.4}")
}

/// Forecast report serialized to `forecast_lag{N}.json`.
#[derive(Debug, Serialize, Deserialize)]
pub struct ForecastReport {
    #[serde(skip_deserializing)]
    pub parameters: Option<ReportParameters>,
    pub week: WeekWindow,
    pub lag: i64,
    /// Basis name -> forecast shares (fractions).
    pub forecasts: BTreeMap<String, ForecastShare>,
    /// Basis name -> evaluation, present when official results were given.
    pub evaluations: BTreeMap<String, EvalReport>,
}

pub fn forecast_json_path(out_dir: &Path, lag: i64) -> PathBuf {
    out_dir.join(format!("forecast_lag{lag}.json"))
}

pub fn write_forecast_report(out_dir: &Path, report: &ForecastReport) -> Result<(), CliError> {
    let json_path = forecast_json_path(out_dir, report.lag);
    let json = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::compute(format!("serialize forecast report: {e}")))?;
    std::fs::write(&json_path, json + "\n").map_err(write_err(&json_path))?;

    let csv_path = out_dir.join(format!("forecast_lag{}.csv", report.lag));
    let mut writer = csv::Writer::from_path(&csv_path).map_err(csv_err(&csv_path))?;
    writer
        .write_record(["basis", "option", "share", "share_pct"])
        .map_err(csv_err(&csv_path))?;
    for (basis, forecast) in &report.forecasts {
        for (option, share) in &forecast.shares {
            writer
                .write_record([basis, option, &format_float(*share), &pct(*share)])
                .map_err(csv_err(&csv_path))?;
        }
    }
    writer.flush().map_err(write_err(&csv_path))?;

    for (basis, eval) in &report.evaluations {
        write_eval_csv(out_dir, report.lag, basis, eval)?;
    }
    Ok(())
}

pub fn read_forecast_report(out_dir: &Path, lag: i64) -> Result<ForecastReport, CliError> {
    let path = forecast_json_path(out_dir, lag);
    let text = std::fs::read_to_string(&path).map_err(|e| {
        CliError::usage(format!(
            "cannot read {} (run `sbs forecast` first): {e}",
            path.display()
        ))
    })?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("invalid forecast report {}: {e}", path.display())))
}

/// Evaluation CSV: one row per option, then MAPE and MAE footer rows.
pub fn write_eval_csv(
    out_dir: &Path,
    lag: i64,
    basis: &str,
    report: &EvalReport,
) -> Result<(), CliError> {
    let path = out_dir.join(format!("eval_lag{lag}_{basis}.csv"));
    let mut writer = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    writer
        .write_record([
            "option",
            "actual",
            "adjusted_actual",
            "forecast",
            "abs_error_pp",
            "ape",
            "real_rank",
            "forecast_rank",
        ])
        .map_err(csv_err(&path))?;
    for row in &report.rows {
        writer
            .write_record([
                row.option.clone(),
                pct(row.actual),
                pct(row.adjusted_actual),
                pct(row.forecast),
                pp(row.abs_error_pp),
                pct(row.ape),
                row.real_rank.to_string(),
                row.forecast_rank.to_string(),
            ])
            .map_err(csv_err(&path))?;
    }
    writer
        .write_record(["MAPE", "", "", "", "", &pct(report.mape), "", ""])
        .map_err(csv_err(&path))?;
    writer
        .write_record(["MAE", "", "", "", &pp(report.mae_pp), "", "", ""])
        .map_err(csv_err(&path))?;
    writer.flush().map_err(write_err(&path))
}

/// Long-format plot data: `week,brand,measure,value` with one row per
/// scored week, brand and measure. Absent weeks produce no rows.
pub fn write_plot_csv(table: &SbsTable, path: &Path) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_err(path))?;
    writer
        .write_record(["week", "brand", "measure", "value"])
        .map_err(csv_err(path))?;
    for (week, entry) in &table.rows {
        let WeekEntry::Scored(scores) = entry else {
            continue;
        };
        for (brand, score) in scores {
            for (measure, value) in [
                ("prevalence", score.z_prevalence),
                ("diversity", score.z_diversity),
                ("connectivity", score.z_connectivity),
                ("sbs", score.sbs),
            ] {
                writer
                    .write_record([&week.label(), brand, measure, &format_float(value)])
                    .map_err(csv_err(path))?;
            }
        }
    }
    writer.flush().map_err(write_err(path))
}

/// Parse plot data back: (week label, brand, measure) -> value.
pub fn read_plot_csv(path: &Path) -> Result<BTreeMap<(String, String, String), f64>, CliError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let mut series = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        if record.len() != 4 {
            return Err(CliError::usage(format!(
                "{}: expected 4 columns, got {}",
                path.display(),
                record.len()
            )));
        }
        let value: f64 = record[3]
            .parse()
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        series.insert(
            (
                record[0].to_string(),
                record[1].to_string(),
                record[2].to_string(),
            ),
            value,
        );
    }
    Ok(series)
}
