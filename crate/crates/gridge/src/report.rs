//! JSON and TSV rendering of reports.
//!
//! Every real number is rounded to 10 significant digits and written in the
//! shortest form that reads back to the rounded value, so parsing a report
//! and writing it again reproduces the same bytes. Infinite values (the
//! coefficient of variation at zero mean) are written as the token `inf`.
//!
//! Non-trace TSV output is a two-column `key`/`value` table obtained by
//! flattening the JSON document: nested objects join keys with `.` and array
//! elements append a 1-based `[i]`.

use gridge_core::diagnostics::{CoefficientOfVariation, DiagnosticsReport};
use gridge_core::estimator::EstimateReport;
use gridge_core::inference::BootstrapReport;
use gridge_core::selection::SelectionResult;
use gridge_core::spectral::{PenaltyKind, PenaltyMatrix};
use nalgebra::{DMatrix, DVector};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::model::{p_values, Analysis};

pub const INF_TOKEN: &str = "inf";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Tsv,
}

/// `x` rounded to 10 significant digits.
pub fn round(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.9e}").parse().unwrap_or(x)
}

pub fn number(x: f64) -> Value {
    if x.is_infinite() {
        Value::String(if x > 0.0 { INF_TOKEN.into() } else { format!("-{INF_TOKEN}") })
    } else {
        serde_json::Number::from_f64(round(x)).map_or(Value::Null, Value::Number)
    }
}

fn numbers<'a>(values: impl IntoIterator<Item = &'a f64>) -> Value {
    Value::Array(values.into_iter().map(|&v| number(v)).collect())
}

fn matrix(m: &DMatrix<f64>) -> Value {
    Value::Array(m.row_iter().map(|row| numbers(row.iter())).collect())
}

fn vector(v: &DVector<f64>) -> Value {
    numbers(v.iter())
}

pub fn penalty(p: &PenaltyMatrix) -> Value {
    let mut obj = Map::new();
    match p.kind() {
        PenaltyKind::Zero => {
            obj.insert("kind".into(), "zero".into());
        }
        PenaltyKind::Uniform(k) => {
            obj.insert("kind".into(), "uniform".into());
            obj.insert("k".into(), number(k));
        }
        PenaltyKind::Single { index, k } => {
            obj.insert("kind".into(), "single".into());
            obj.insert("index".into(), (index + 1).into());
            obj.insert("k".into(), number(k));
        }
        PenaltyKind::General => {
            obj.insert("kind".into(), "general".into());
        }
    }
    obj.insert("values".into(), numbers(p.values()));
    Value::Object(obj)
}

fn cv(value: CoefficientOfVariation) -> Value {
    match value {
        CoefficientOfVariation::Finite(v) => number(v),
        CoefficientOfVariation::Infinite => INF_TOKEN.into(),
    }
}

fn header(command: &str, analysis: &Analysis) -> Map<String, Value> {
    let mut obj = Map::new();
    obj.insert("command".into(), command.into());
    obj.insert("n".into(), analysis.cross.n.into());
    obj.insert("m".into(), analysis.m().into());
    obj.insert("names".into(), json!(analysis.names()));
    obj
}

pub fn diagnostics(analysis: &Analysis, report: &DiagnosticsReport) -> Value {
    let mut obj = header("diagnose", analysis);
    obj.insert("eigenvalues".into(), vector(analysis.spectral.eigenvalues()));
    obj.insert("correlation_det".into(), number(analysis.correlation_det));
    obj.insert("penalty".into(), penalty(&report.k_used));
    obj.insert("cv".into(), Value::Array(report.cv.iter().map(|&c| cv(c)).collect()));
    obj.insert("cv_troubling".into(), json!(report.cv_troubling));
    obj.insert("corr".into(), matrix(&report.corr));
    obj.insert("corr_det".into(), number(report.corr_det));
    obj.insert("vif".into(), numbers(&report.vif));
    obj.insert("cn".into(), number(report.cn));
    obj.insert("convention_sensitive".into(), report.convention_sensitive.into());
    Value::Object(obj)
}

/// The OLS block (σ², R², t statistics, p-values) is added for an
/// unpenalized fit of raw data.
pub fn estimate(analysis: &Analysis, report: &EstimateReport) -> Result<Value> {
    let mut obj = header("estimate", analysis);
    obj.insert("penalty".into(), penalty(&report.k_used));
    obj.insert("coefficients".into(), vector(&report.coefficients));
    obj.insert("std_errors".into(), vector(&report.std_errors));
    obj.insert("covariance".into(), matrix(&report.covariance));
    obj.insert("mse".into(), number(report.mse));
    obj.insert("gof".into(), number(report.gof));
    obj.insert("norm".into(), number(report.norm));
    obj.insert("cn".into(), number(report.cn));
    obj.insert("sigma2_plugin".into(), number(analysis.plugins.sigma2));
    if let (Some(fit), true) = (&analysis.ols, report.k_used.is_zero()) {
        let p = p_values(&fit.t_statistics, fit.df)?;
        obj.insert(
            "ols".into(),
            json!({
                "sigma2": number(fit.sigma2),
                "r_squared": number(fit.r_squared),
                "df": fit.df,
                "t_statistics": vector(&fit.t_statistics),
                "p_values": numbers(&p),
            }),
        );
    }
    Ok(Value::Object(obj))
}

fn optional(x: Option<f64>) -> Value {
    x.map_or(Value::Null, number)
}

pub fn selection(analysis: &Analysis, results: &[SelectionResult]) -> Value {
    let mut obj = header("select", analysis);
    let items = results
        .iter()
        .map(|r| {
            json!({
                "rule": r.rule,
                "found": r.k.is_some(),
                "penalty": r.k.as_ref().map_or(Value::Null, penalty),
                "objective_value": optional(r.objective_value),
                "achieved_cn": optional(r.achieved_cn),
                "achieved_mse": optional(r.achieved_mse),
                "plateau": r.plateau.map_or(Value::Null, |p| json!({
                    "lower": number(p.lower),
                    "upper": number(p.upper),
                    "cn": number(p.cn),
                })),
            })
        })
        .collect();
    obj.insert("results".into(), Value::Array(items));
    Value::Object(obj)
}

pub fn bootstrap(analysis: &Analysis, report: &BootstrapReport) -> Value {
    let mut obj = header("bootstrap", analysis);
    let pair = |(lo, hi): (f64, f64)| json!([number(lo), number(hi)]);
    obj.insert("penalty".into(), penalty(&report.k_used));
    obj.insert("level".into(), number(report.level));
    obj.insert("replicates".into(), report.replicates.into());
    obj.insert("seed".into(), report.seed.into());
    obj.insert("estimates".into(), vector(&report.estimates));
    obj.insert("intervals".into(), Value::Array(report.intervals.iter().map(|&p| pair(p)).collect()));
    obj.insert("gof_interval".into(), pair(report.gof_interval));
    obj.insert("redraws".into(), report.redraws.into());
    Value::Object(obj)
}

pub fn json_text(value: &Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializing a JSON value cannot fail");
    text.push('\n');
    text
}

fn flatten(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{}]", i + 1), v, out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

pub fn tsv_text(value: &Value) -> String {
    let mut rows = Vec::new();
    flatten("", value, &mut rows);
    let mut text = String::from("key\tvalue\n");
    for (k, v) in rows {
        text.push_str(&k);
        text.push('\t');
        text.push_str(&v);
        text.push('\n');
    }
    text
}

pub fn render(value: &Value, format: Format) -> String {
    match format {
        Format::Json => json_text(value),
        Format::Tsv => tsv_text(value),
    }
}

/// A numeric table written as TSV with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// A TSV cell: rounded number in shortest form, or `inf`.
pub fn cell(x: f64) -> String {
    match number(x) {
        Value::String(s) => s,
        other => other.to_string(),
    }
}

impl Table {
    pub fn tsv(&self) -> String {
        let mut text = self.columns.join("\t");
        text.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&v| cell(v)).collect();
            text.push_str(&cells.join("\t"));
            text.push('\n');
        }
        text
    }

    pub fn json(&self) -> Value {
        json!({
            "command": "trace",
            "columns": self.columns,
            "rows": self.rows.iter().map(numbers).collect::<Vec<_>>(),
        })
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => json_text(&self.json()),
            Format::Tsv => self.tsv(),
        }
    }

    /// Reads a table written by [`Table::tsv`].
    pub fn parse_tsv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let columns: Vec<String> =
            lines.next().ok_or_else(|| Error::Report("empty table".into()))?.split('\t').map(String::from).collect();
        let rows = lines
            .map(|line| {
                let row = line.split('\t').map(parse_cell).collect::<Result<Vec<_>>>()?;
                if row.len() == columns.len() {
                    Ok(row)
                } else {
                    Err(Error::Report(format!("row has {} cells, header has {}", row.len(), columns.len())))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { columns, rows })
    }
}

fn parse_cell(text: &str) -> Result<f64> {
    match text {
        INF_TOKEN => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => text.parse().map_err(|_| Error::Report(format!("bad cell `{text}`"))),
    }
}

/// Parses a key/value TSV report, re-rendering numeric values canonically.
pub fn reformat_tsv(text: &str) -> Result<String> {
    let mut lines = text.lines();
    if lines.next() != Some("key\tvalue") {
        return Err(Error::Report("missing key/value header".into()));
    }
    let mut out = String::from("key\tvalue\n");
    for line in lines {
        let (key, value) = line.split_once('\t').ok_or_else(|| Error::Report(format!("bad line `{line}`")))?;
        let value = match value.parse::<f64>() {
            Ok(x) if x.is_finite() && value != INF_TOKEN => {
                let v: Value = serde_json::from_str(value).map_err(|e| Error::Report(e.to_string()))?;
                v.to_string()
            }
            _ => value.to_string(),
        };
        out.push_str(&format!("{key}\t{value}\n"));
    }
    Ok(out)
}

/// Parses a JSON report and renders it again.
pub fn reformat_json(text: &str) -> Result<String> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Report(e.to_string()))?;
    Ok(json_text(&value))
}
