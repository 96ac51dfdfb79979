//! Grid files: a four-line CSV header followed by row-major values, or the
//! equivalent JSON object `{dim, cells, origin, spacing, values}`.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{CellMask, GridDomain, GridFunction};

#[derive(Serialize, Deserialize)]
struct GridJson {
    dim: usize,
    cells: Vec<usize>,
    origin: Vec<f64>,
    spacing: f64,
    values: Vec<f64>,
}

fn perr<T>(line: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse { line, msg: msg.into() })
}

/// Shortest text that parses back to the same `f64`.
pub fn format_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn header<'a>(line: Option<(usize, &'a str)>, key: &str, expect_line: usize) -> Result<(usize, Vec<&'a str>)> {
    let Some((n, text)) = line else {
        return perr(expect_line, format!("missing '{key}' header line"));
    };
    let mut parts = text.split(',').map(str::trim);
    if parts.next() != Some(key) {
        return perr(n, format!("expected '{key},...' header, found '{text}'"));
    }
    Ok((n, parts.collect()))
}

fn parse_num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
    s.parse::<T>().or_else(|_| perr(line, format!("cannot parse '{s}' as a number")))
}

/// Parses grid text in either format.
pub fn parse_grid(text: &str) -> Result<GridFunction> {
    if text.trim_start().starts_with('{') {
        let g: GridJson = serde_json::from_str(text)
            .map_err(|e| Error::Parse { line: e.line(), msg: e.to_string() })?;
        if g.values.iter().any(|v| !v.is_finite()) {
            return perr(1, "non-finite value");
        }
        let domain = GridDomain::new(g.origin, g.cells, g.spacing)?;
        return GridFunction::new(domain, g.values);
    }
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty());
    let (n1, dim) = header(lines.next(), "dim", 1)?;
    let dim: usize = match dim.as_slice() {
        [d] => parse_num(n1, d)?,
        _ => return perr(n1, "dim line takes one value"),
    };
    if dim != 1 && dim != 2 {
        return perr(n1, format!("dimension must be 1 or 2, got {dim}"));
    }
    let (n2, cells) = header(lines.next(), "cells", 2)?;
    if cells.len() != dim {
        return perr(n2, format!("expected {dim} cell counts"));
    }
    let cells: Vec<usize> = cells.iter().map(|c| parse_num(n2, c)).collect::<Result<_>>()?;
    if cells.contains(&0) {
        return perr(n2, "cell counts must be positive");
    }
    let (n3, origin) = header(lines.next(), "origin", 3)?;
    if origin.len() != dim {
        return perr(n3, format!("expected {dim} origin coordinates"));
    }
    let origin: Vec<f64> = origin.iter().map(|c| parse_num(n3, c)).collect::<Result<_>>()?;
    let (n4, spacing) = header(lines.next(), "spacing", 4)?;
    let spacing: f64 = match spacing.as_slice() {
        [s] => parse_num(n4, s)?,
        _ => return perr(n4, "spacing line takes one value"),
    };
    if !(spacing > 0.0 && spacing.is_finite()) {
        return perr(n4, "spacing must be positive");
    }
    let (rows, cols) = if dim == 1 { (1, cells[0]) } else { (cells[0], cells[1]) };
    let mut values = Vec::with_capacity(rows * cols);
    let mut last = n4;
    for (n, l) in lines {
        last = n;
        if values.len() == rows * cols {
            return perr(n, "more value rows than the header declares");
        }
        let row: Vec<f64> = l.split(',').map(|s| parse_num(n, s.trim())).collect::<Result<_>>()?;
        if row.len() != cols {
            return perr(n, format!("expected {cols} values, found {}", row.len()));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return perr(n, "non-finite value");
        }
        values.extend(row);
    }
    if values.len() != rows * cols {
        return perr(last + 1, format!("expected {rows} value rows, found {}", values.len() / cols));
    }
    GridFunction::new(GridDomain::new(origin, cells, spacing)?, values)
}

pub fn format_grid(u: &GridFunction) -> String {
    let d = &u.domain;
    let join = |xs: &mut dyn Iterator<Item = String>| xs.collect::<Vec<_>>().join(",");
    let mut out = String::new();
    out.push_str(&format!("dim,{}\n", d.dim));
    out.push_str(&format!("cells,{}\n", join(&mut d.cells.iter().map(|c| c.to_string()))));
    out.push_str(&format!("origin,{}\n", join(&mut d.origin.iter().map(|&x| format_f64(x)))));
    out.push_str(&format!("spacing,{}\n", format_f64(d.spacing)));
    for row in u.values.chunks(d.cols()) {
        out.push_str(&join(&mut row.iter().map(|&x| format_f64(x))));
        out.push('\n');
    }
    out
}

pub fn grid_to_json(u: &GridFunction) -> String {
    let d = &u.domain;
    serde_json::to_string(&GridJson {
        dim: d.dim,
        cells: d.cells.clone(),
        origin: d.origin.clone(),
        spacing: d.spacing,
        values: u.values.clone(),
    })
    .expect("grid serializes")
}

pub fn read_grid(path: &Path) -> Result<GridFunction> {
    parse_grid(&std::fs::read_to_string(path)?)
}

/// Writes JSON when the extension is `.json`, CSV otherwise.
pub fn write_grid(path: &Path, u: &GridFunction) -> Result<()> {
    let text = if path.extension().is_some_and(|e| e == "json") { grid_to_json(u) } else { format_grid(u) };
    std::fs::write(path, text)?;
    Ok(())
}

/// A grid file of 0/1 values read as a cell mask.
pub fn read_mask(path: &Path) -> Result<CellMask> {
    let g = read_grid(path)?;
    if let Some(i) = g.values.iter().position(|&v| v != 0.0 && v != 1.0) {
        let row = i / g.domain.cols();
        return perr(5 + row, "mask values must be 0 or 1");
    }
    Ok(CellMask::from_grid(&g))
}
