use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Vector;

use super::SimTrace;

/// One row per step: index, branch, horizon, cost, terminal generator count,
/// then state, reference, input and disturbance components.
pub fn trace_csv_string(trace: &SimTrace) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let first = trace.records.first();
    let n = first.map_or(0, |r| r.x.len());
    let m = first.map_or(0, |r| r.u.len());
    let mut header = vec![
        "k".to_string(),
        "branch".into(),
        "horizon".into(),
        "cost".into(),
        "terminal_generators".into(),
    ];
    header.extend((0..n).map(|i| format!("x{i}")));
    header.extend((0..n).map(|i| format!("r{i}")));
    header.extend((0..m).map(|i| format!("u{i}")));
    header.extend((0..n).map(|i| format!("w{i}")));
    w.write_record(&header)?;
    for r in &trace.records {
        let mut row = vec![
            r.k.to_string(),
            r.branch.as_str().to_string(),
            r.horizon.to_string(),
            r.cost.to_string(),
            r.terminal_generators.to_string(),
        ];
        for v in r.x.iter().chain(&r.reference).chain(&r.u).chain(&r.w) {
            row.push(v.to_string());
        }
        w.write_record(&row)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidInput(format!("csv buffer: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidInput(e.to_string()))
}

pub fn write_trace_csv(path: impl AsRef<Path>, trace: &SimTrace) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, trace_csv_string(trace)?).map_err(|e| Error::io(path, e))
}

pub fn write_trace_json(path: impl AsRef<Path>, trace: &SimTrace) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(trace)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_trace_json(path: impl AsRef<Path>) -> Result<SimTrace> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Disturbance sequence from a JSON array of vectors, or the `w` column of a
/// JSON trace.
pub fn read_disturbance_sequence(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if let Ok(seq) = serde_json::from_str::<Vec<Vec<f64>>>(&text) {
        return Ok(seq);
    }
    let trace: SimTrace = serde_json::from_str(&text).map_err(|e| {
        Error::InvalidInput(format!(
            "{}: expected a JSON array of disturbance vectors or a trace ({e})",
            path.display()
        ))
    })?;
    Ok(trace.disturbances())
}

/// Closed polyline (first vertex repeated at the end) as `x,y` rows.
pub fn write_polyline_csv(path: impl AsRef<Path>, vertices: &[Vector], columns: (&str, &str)) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([columns.0, columns.1])?;
    let closing = if vertices.len() > 1 { vertices.first() } else { None };
    for v in vertices.iter().chain(closing) {
        w.write_record([v[0].to_string(), v[1].to_string()])?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidInput(format!("csv buffer: {e}")))?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
