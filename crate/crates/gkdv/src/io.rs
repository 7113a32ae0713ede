//! File formats: two-column CSV for grid functions, pretty JSON for records, and
//! 64-bit content hashes.

use std::fmt::Write as _;
use std::fs;
use std::hash::Hasher;
use std::path::Path;

use gkdv_core::{Grid, GridFunction, Topology};
use serde::de::DeserializeOwned;
use serde::Serialize;
use twox_hash::XxHash64;

use crate::error::{CliError, CliResult};

/// `f64` with 17 significant digits, enough to round-trip exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// ```text
/// # grid=line left=-40 right=40 n=2561
/// # y,value
/// -4.0000000000000000e1,1.2e-17
/// ```
pub fn grid_function_to_csv(f: &GridFunction, axis: &str) -> String {
    let g = f.grid();
    let topo = match g.topology() {
        Topology::Periodic => "periodic",
        Topology::Line => "line",
    };
    let mut out = String::with_capacity(48 * f.len() + 96);
    let _ = writeln!(
        out,
        "# grid={topo} left={} right={} n={}",
        fmt_f64(g.left()),
        fmt_f64(g.right()),
        g.len()
    );
    let _ = writeln!(out, "# {axis},value");
    for (i, v) in f.values().iter().enumerate() {
        let _ = writeln!(out, "{},{}", fmt_f64(g.point(i)), fmt_f64(*v));
    }
    out
}

pub fn grid_function_from_csv(text: &str) -> CliResult<GridFunction> {
    let mut grid = None;
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if rest.trim_start().starts_with("grid=") {
                grid = Some(parse_grid_header(rest)?);
            }
            continue;
        }
        let mut cols = line.split(',');
        let (Some(_), Some(v), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(CliError::Format(format!("line {}: expected two columns", lineno + 1)));
        };
        values.push(
            v.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Format(format!("line {}: {e}", lineno + 1)))?,
        );
    }
    let grid = grid.ok_or_else(|| CliError::Format("missing '# grid=' header".into()))?;
    Ok(GridFunction::new(grid, values)?)
}

fn parse_grid_header(rest: &str) -> CliResult<Grid> {
    let (mut topo, mut left, mut right, mut n) = (None, None, None, None);
    for item in rest.split_whitespace() {
        let Some((k, v)) = item.split_once('=') else { continue };
        let num = || {
            v.parse::<f64>()
                .map_err(|e| CliError::Format(format!("grid header {k}: {e}")))
        };
        match k {
            "grid" => topo = Some(v.to_string()),
            "left" => left = Some(num()?),
            "right" => right = Some(num()?),
            "n" => {
                n = Some(
                    v.parse::<usize>()
                        .map_err(|e| CliError::Format(format!("grid header n: {e}")))?,
                )
            }
            _ => {}
        }
    }
    let (Some(topo), Some(left), Some(right), Some(n)) = (topo, left, right, n) else {
        return Err(CliError::Format("incomplete grid header".into()));
    };
    let topology = match topo.as_str() {
        "periodic" => Topology::Periodic,
        "line" => Topology::Line,
        other => return Err(CliError::Format(format!("unknown topology '{other}'"))),
    };
    Ok(Grid::new(left, right, n, topology)?)
}

pub fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Format(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = XxHash64::with_seed(0);
    h.write(bytes);
    format!("{:016x}", h.finish())
}

/// Writes `text` to `path` (creating parent directories) and returns its hash.
pub fn write_text(path: &Path, text: &str) -> CliResult<String> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))?;
    Ok(content_hash(text.as_bytes()))
}

pub fn hash_file(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(content_hash(&bytes))
}
