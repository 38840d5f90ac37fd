use std::f64::consts::PI;
use std::path::Path;

use anyhow::{Context, Result};
use hillspec::projection::GridFunction;
use hillspec::C64;
use serde::Serialize;

use crate::ConfigError;

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// CSV with a header row; floats use Rust's shortest round-trip formatting.
pub fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn grid_csv(g: &GridFunction) -> Result<String> {
    csv_string(
        &["x", "re", "im"],
        g.x_grid.iter().zip(&g.values).map(|(x, v)| vec![x.to_string(), v.re.to_string(), v.im.to_string()]),
    )
}

/// Reads `x, re, im` rows on the uniform grid `-Nπ + iπ/p`.
pub fn read_grid_csv(path: &Path) -> Result<GridFunction> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut xs = Vec::new();
    let mut vals = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let num = |i: usize| -> Result<f64, ConfigError> {
            rec.get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| ConfigError(format!("{}: bad number in column {}", path.display(), i + 1)))
        };
        xs.push(num(0)?);
        vals.push(C64::new(num(1)?, num(2)?));
    }
    if xs.len() < 8 {
        return Err(ConfigError(format!("{}: too few rows", path.display())).into());
    }
    let n_cells = (-xs[0] / PI).round();
    let per_cell = xs.len() as f64 / (2.0 * n_cells);
    let ok = n_cells >= 1.0
        && per_cell.fract() == 0.0
        && xs.iter().enumerate().all(|(i, x)| (x - (-n_cells * PI + i as f64 * PI / per_cell)).abs() < 1e-9 * (1.0 + x.abs()));
    if !ok {
        return Err(ConfigError(format!("{}: x column is not a uniform grid on [-N pi, N pi)", path.display())).into());
    }
    Ok(GridFunction::from_values(n_cells as usize, per_cell as usize, vals)?)
}

pub fn c_str(z: C64) -> [String; 2] {
    [z.re.to_string(), z.im.to_string()]
}
