//! CSV and JSON serialization of metric fields.
//!
//! CSV layout: a header row `coords,<p_0>,<p_1>,...` followed by one row per
//! grid point `<p_i>,d(i,0),d(i,1),...`. A point is written as its chart
//! coordinates joined by `;`. Values use the shortest round-trip decimal
//! form, `inf` for the +∞ sentinel, so reading back is bit exact.

use std::io::{BufRead, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{sample_window, Grid, WindowSpec};
use crate::group::Group;

use super::MetricField;

pub const FIELD_SCHEMA: &str = "hausflow.metric_field/1";

/// Grid coordinates written to CSV headers must agree to this tolerance.
const HEADER_TOL: f64 = 1e-12;

fn fmt_point(c: &[f64]) -> String {
    c.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

fn fmt_value(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else {
        v.to_string()
    }
}

fn parse_value(s: &str) -> Result<f64> {
    let s = s.trim();
    if s == "inf" {
        return Ok(f64::INFINITY);
    }
    s.parse::<f64>()
        .map_err(|e| Error::Parse(format!("bad value {s:?}: {e}")))
}

fn parse_point(s: &str) -> Result<Vec<f64>> {
    s.split(';').map(parse_value).collect()
}

pub fn write_field_csv<W: Write>(field: &MetricField, mut w: W) -> Result<()> {
    let grid = field.grid();
    let pts: Vec<String> = (0..grid.len())
        .map(|i| fmt_point(&grid.coords(i)))
        .collect();
    write!(w, "coords")?;
    for p in &pts {
        write!(w, ",{p}")?;
    }
    writeln!(w)?;
    for (i, p) in pts.iter().enumerate() {
        write!(w, "{p}")?;
        for v in field.row(i) {
            write!(w, ",{}", fmt_value(*v))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Reads a CSV field sampled on `grid`; the header must match its points.
pub fn read_field_csv<R: BufRead>(grid: Arc<Grid>, r: R, label: &str) -> Result<MetricField> {
    let n = grid.len();
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty CSV".into()))??;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() != n + 1 || cols[0] != "coords" {
        return Err(Error::Parse(format!(
            "header has {} columns, grid has {n} points",
            cols.len().saturating_sub(1)
        )));
    }
    for (i, c) in cols[1..].iter().enumerate() {
        if !grid
            .group
            .approx_eq(&parse_point(c)?, &grid.coords(i), HEADER_TOL)
        {
            return Err(Error::GridMismatch);
        }
    }
    let mut values = Vec::with_capacity(n * n);
    for i in 0..n {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("missing row {i}")))??;
        let mut cells = line.split(',');
        cells.next();
        let before = values.len();
        for c in cells {
            values.push(parse_value(c)?);
        }
        if values.len() - before != n {
            return Err(Error::Parse(format!("row {i} has the wrong length")));
        }
    }
    MetricField::from_values(grid, values, label)
}

#[derive(Serialize, Deserialize)]
struct FieldEnvelope {
    schema: String,
    label: String,
    group: Group,
    window: WindowSpec,
    n: usize,
    /// Row-major values; `null` encodes +∞.
    values: Vec<Option<f64>>,
}

pub fn field_to_json(field: &MetricField) -> serde_json::Value {
    let grid = field.grid();
    let env = FieldEnvelope {
        schema: FIELD_SCHEMA.to_string(),
        label: field.label().to_string(),
        group: grid.group,
        window: grid.window.clone(),
        n: grid.len(),
        values: field
            .values()
            .iter()
            .map(|v| v.is_finite().then_some(*v))
            .collect(),
    };
    serde_json::to_value(env).expect("field envelope serializes")
}

pub fn field_from_json(v: serde_json::Value) -> Result<MetricField> {
    let env: FieldEnvelope = serde_json::from_value(v)?;
    if env.schema != FIELD_SCHEMA {
        return Err(Error::Parse(format!("unknown schema {:?}", env.schema)));
    }
    let grid = Arc::new(sample_window(env.group, &env.window)?);
    if grid.len() != env.n {
        return Err(Error::GridMismatch);
    }
    let values = env
        .values
        .into_iter()
        .map(|v| v.unwrap_or(f64::INFINITY))
        .collect();
    MetricField::from_values(grid, values, env.label)
}
