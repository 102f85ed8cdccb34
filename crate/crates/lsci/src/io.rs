//! File formats: function-set CSV, grid header JSON, and serde helpers.
//!
//! CSV layout is one row per sample with one column per grid point, plus an
//! optional leading `t` index column. Values are printed with 17 significant
//! digits so that a write/read round trip is bit exact.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{LsciError, Result};
use crate::function::{FunctionSample, FunctionSet};
use crate::grid::{Grid, SharedGrid};

/// Serde adapter for shared grids (serialized inline as the grid itself).
pub mod grid_serde {
    use super::*;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::sync::Arc;

    pub fn serialize<S: Serializer>(grid: &SharedGrid, s: S) -> std::result::Result<S::Ok, S::Error> {
        Grid::serialize(grid, s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<SharedGrid, D::Error> {
        Grid::deserialize(d).map(Arc::new)
    }
}

/// 17 significant digits; always round-trips f64 exactly.
pub fn format_f64(x: f64) -> String {
    format!("{:.16e}", x)
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| LsciError::Parse(format!("bad float {s:?}: {e}")))
}

/// Write a grid header as pretty JSON.
pub fn write_grid_json(path: &Path, grid: &Grid) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, grid)?;
    f.write_all(b"\n")?;
    Ok(())
}

/// Read a grid header written by [`write_grid_json`].
pub fn read_grid_json(path: &Path) -> Result<SharedGrid> {
    let mut s = String::new();
    File::open(path)?.read_to_string(&mut s)?;
    let grid: Grid = serde_json::from_str(&s)?;
    // revalidate invariants on the way in
    Grid::from_parts(grid.kind(), grid.coords().to_vec(), grid.weights().to_vec())
}

/// Write a function set as CSV (one row per sample; leading `t` column when
/// index labels are present).
pub fn write_function_set_csv(path: &Path, set: &FunctionSet) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    let p = set.grid().len();
    let mut header = String::new();
    if set.index_labels().is_some() {
        header.push_str("t,");
    }
    for j in 0..p {
        if j > 0 {
            header.push(',');
        }
        header.push_str(&format!("v{j}"));
    }
    writeln!(f, "{header}")?;
    for (i, s) in set.samples().iter().enumerate() {
        let mut row = String::with_capacity(p * 26);
        if let Some(labels) = set.index_labels() {
            row.push_str(&format_f64(labels[i]));
            row.push(',');
        }
        for (j, v) in s.values().iter().enumerate() {
            if j > 0 {
                row.push(',');
            }
            row.push_str(&format_f64(*v));
        }
        writeln!(f, "{row}")?;
    }
    Ok(())
}

/// Read a function set CSV written by [`write_function_set_csv`].
pub fn read_function_set_csv(path: &Path, grid: SharedGrid) -> Result<FunctionSet> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| LsciError::Parse(format!("{}: empty csv", path.display())))?;
    let has_index = header.starts_with("t,") || header == "t";
    let p = grid.len();
    let mut samples = Vec::new();
    let mut labels = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        if has_index {
            let t = fields
                .next()
                .ok_or_else(|| LsciError::Parse(format!("line {}: missing index", lineno + 2)))?;
            labels.push(parse_f64(t)?);
        }
        let values: Result<Vec<f64>> = fields.map(parse_f64).collect();
        let values = values?;
        if values.len() != p {
            return Err(LsciError::ShapeMismatch(format!(
                "{}: line {} has {} values, grid has {} points",
                path.display(),
                lineno + 2,
                values.len(),
                p
            )));
        }
        samples.push(FunctionSample::new(grid.clone(), values)?);
    }
    let set = FunctionSet::new(grid, samples)?;
    if has_index {
        set.with_labels(labels)
    } else {
        Ok(set)
    }
}

/// Write per-sample scalars (e.g. the true noise scale) as a two-column CSV.
pub fn write_scalar_csv(path: &Path, name: &str, values: &[f64]) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    writeln!(f, "index,{name}")?;
    for (i, v) in values.iter().enumerate() {
        writeln!(f, "{i},{}", format_f64(*v))?;
    }
    Ok(())
}

/// Read the second column of a CSV written by [`write_scalar_csv`].
pub fn read_scalar_csv(path: &Path) -> Result<Vec<f64>> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let field = l
                .split(',')
                .nth(1)
                .ok_or_else(|| LsciError::Parse(format!("bad scalar row {l:?}")))?;
            parse_f64(field)
        })
        .collect()
}
