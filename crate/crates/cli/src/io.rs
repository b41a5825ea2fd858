//! Field and boundary-table CSV files, JSON reports.
//!
//! Floats are written with `{:.16e}` (17 significant digits), which parses
//! back to the same double, so export → import → export is byte-identical.

use std::fs;
use std::path::Path;

use inflap::grid::{BoundaryData, Grid, NodeKind, ScalarField};
use serde::Serialize;

use crate::CliError;

fn header(grid: &Grid) -> &'static [&'static str] {
    if grid.dim() == 1 {
        &["x", "value"]
    } else {
        &["x", "y", "value"]
    }
}

fn number(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn write_rows(
    path: &Path,
    grid: &Grid,
    nodes: &[usize],
    value: impl Fn(usize) -> f64,
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_error(path, e))?;
    w.write_record(header(grid))
        .map_err(|e| io_error(path, e))?;
    for (k, &n) in nodes.iter().enumerate() {
        let mut row: Vec<String> = grid.coord(n).iter().map(|&c| number(c)).collect();
        row.push(number(value(k)));
        w.write_record(&row).map_err(|e| io_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

/// Every node in grid order.
pub fn write_field(path: &Path, grid: &Grid, u: &ScalarField) -> Result<(), CliError> {
    let nodes: Vec<usize> = (0..grid.len()).collect();
    write_rows(path, grid, &nodes, |k| u.get(k))
}

/// Boundary nodes in boundary order.
pub fn write_boundary_table(path: &Path, grid: &Grid, g: &BoundaryData) -> Result<(), CliError> {
    write_rows(path, grid, grid.boundary(), |k| g.value(k))
}

/// Rows as (coordinates, value) after checking the header.
fn read_rows(path: &Path, grid: &Grid, what: &str) -> Result<Vec<(Vec<f64>, f64)>, CliError> {
    let bad = |reason: String| CliError::Validation(format!("{what} {}: {reason}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let expected = header(grid);
    let got = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    if got.iter().collect::<Vec<_>>() != expected {
        return Err(bad(format!(
            "header must be `{}`, found `{}`",
            expected.join(","),
            got.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let nums = record
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| bad(format!("row {}: {e}", line + 1)))?;
        if nums.iter().any(|v| !v.is_finite()) {
            return Err(bad(format!("row {}: non-finite number", line + 1)));
        }
        let value = nums[nums.len() - 1];
        rows.push((nums[..nums.len() - 1].to_vec(), value));
    }
    Ok(rows)
}

fn matches(grid: &Grid, node: usize, x: &[f64]) -> bool {
    grid.coord(node)
        .iter()
        .zip(x)
        .all(|(a, b)| (a - b).abs() <= 1e-9 * grid.h())
}

fn lattice_node(grid: &Grid, x: &[f64]) -> Option<usize> {
    if x.len() != grid.dim() {
        return None;
    }
    let (lo, _) = grid.bounds();
    let index = |d: usize| ((x[d] - lo[d]) / grid.h()).round() as isize;
    grid.node_at(index(0), if grid.dim() == 2 { index(1) } else { 0 })
}

/// Reads a field written for this grid: rows must list every node in grid
/// order with matching coordinates.
pub fn read_field(path: &Path, grid: &Grid) -> Result<ScalarField, CliError> {
    let rows = read_rows(path, grid, "field")?;
    if rows.len() != grid.len() {
        return Err(CliError::Validation(format!(
            "field {}: {} rows for a grid of {} nodes",
            path.display(),
            rows.len(),
            grid.len()
        )));
    }
    let mut values = Vec::with_capacity(rows.len());
    for (n, (x, v)) in rows.into_iter().enumerate() {
        if !matches(grid, n, &x) {
            return Err(CliError::Validation(format!(
                "field {}: row {} is at {x:?} but node {n} of the grid is at {:?}",
                path.display(),
                n + 1,
                grid.coord(n)
            )));
        }
        values.push(v);
    }
    Ok(ScalarField::new(values))
}

/// Reads a boundary table: one row per boundary node, any order.
pub fn read_boundary_table(path: &Path, grid: &Grid) -> Result<BoundaryData, CliError> {
    let bad = |reason: String| {
        CliError::Validation(format!("boundary table {}: {reason}", path.display()))
    };
    let rows = read_rows(path, grid, "boundary table")?;
    let mut values: Vec<Option<f64>> = vec![None; grid.boundary().len()];
    for (line, (x, v)) in rows.into_iter().enumerate() {
        let node = lattice_node(grid, &x)
            .filter(|&n| matches(grid, n, &x) && grid.kind(n) == NodeKind::Boundary)
            .ok_or_else(|| {
                bad(format!(
                    "row {}: {x:?} is not a boundary node of the grid",
                    line + 1
                ))
            })?;
        let slot = grid.slot(node);
        if values[slot].replace(v).is_some() {
            return Err(bad(format!(
                "row {}: boundary node {x:?} listed twice",
                line + 1
            )));
        }
    }
    if let Some(k) = values.iter().position(Option::is_none) {
        return Err(bad(format!(
            "no value for boundary node {:?}",
            grid.coord(grid.boundary()[k])
        )));
    }
    BoundaryData::from_values(grid, values.into_iter().map(Option::unwrap).collect())
        .map_err(CliError::from)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_error(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_error(path, e))
}
