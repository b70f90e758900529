//! Flat-file outputs: learning curves, aggregates, summaries and datasets.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{AggregateRow, CurveRow, ExperimentConfig, Summary};
use crate::domain::{Context, ContextBox, Dataset, Decision, Observation};
use crate::error::{Error, Result};

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

fn write_rows<T: Serialize>(rows: &[T], header: &[&str], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    if rows.is_empty() {
        w.write_record(header).map_err(|e| csv_err(path, e))?;
    }
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_rows<T: DeserializeOwned>(path: &Path, header: &[&str]) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let found = r.headers().map_err(|e| csv_err(path, e))?;
    if found.iter().collect::<Vec<_>>() != header {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            message: format!("expected header {}", header.join(",")),
        });
    }
    r.deserialize().map(|row| row.map_err(|e| csv_err(path, e))).collect()
}

/// `trial,stage,one_minus_varpi`, one row per (trial, checkpoint).
pub fn write_curve_csv(rows: &[CurveRow], path: &Path) -> Result<()> {
    write_rows(rows, &["trial", "stage", "one_minus_varpi"], path)
}

/// `stage,mean,std` across trials.
pub fn write_aggregate_csv(rows: &[AggregateRow], path: &Path) -> Result<()> {
    write_rows(rows, &["stage", "mean", "std"], path)
}

pub fn read_aggregate(path: &Path) -> Result<Vec<AggregateRow>> {
    read_rows(path, &["stage", "mean", "std"])
}

pub fn write_summary_json(summary: &Summary, config: &ExperimentConfig, path: &Path) -> Result<()> {
    let value = serde_json::json!({ "config": config, "summary": summary });
    let mut text = serde_json::to_string_pretty(&value).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn dataset_header(d: usize) -> Vec<String> {
    let mut h = vec!["stage".to_string(), "decision".to_string()];
    h.extend((1..=d).map(|i| format!("y_{i}")));
    h.push("value".into());
    h
}

/// `stage,decision,y_1..y_d,value`.
pub fn save_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(dataset_header(dataset.dim()))
        .map_err(|e| csv_err(path, e))?;
    let mut rec = Vec::with_capacity(dataset.dim() + 3);
    for o in dataset.observations() {
        rec.clear();
        rec.push(o.stage.to_string());
        rec.push(o.decision.0.to_string());
        rec.extend(o.context.coords().iter().map(f64::to_string));
        rec.push(o.value.to_string());
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a dataset written by [`save_dataset`]. Stages must run 1, 2, ...
pub fn load_dataset(path: &Path, context_box: ContextBox, n_decisions: usize) -> Result<Dataset> {
    let d = context_box.dim();
    let parse_err = |msg: String| Error::Parse {
        path: path.to_path_buf(),
        message: msg,
    };
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let header = r.headers().map_err(|e| csv_err(path, e))?;
    if header.iter().collect::<Vec<_>>() != dataset_header(d) {
        return Err(parse_err(format!("expected header stage,decision,y_1..y_{d},value")));
    }
    let mut obs = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| rec.get(i).unwrap_or_default();
        let num = |i: usize| {
            field(i)
                .parse::<f64>()
                .map_err(|_| parse_err(format!("line {line}: '{}' is not a number", field(i))))
        };
        let int = |i: usize| {
            field(i)
                .parse::<usize>()
                .map_err(|_| parse_err(format!("line {line}: '{}' is not an index", field(i))))
        };
        obs.push(Observation {
            stage: int(0)?,
            decision: Decision(int(1)?),
            context: Context::new((2..d + 2).map(num).collect::<Result<Vec<f64>>>()?),
            value: num(d + 2)?,
        });
    }
    Dataset::from_observations(context_box, n_decisions, obs)
}
