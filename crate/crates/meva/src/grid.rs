//! `MEVA-GRID` text format: a header line `MEVA-GRID 1 <nx> <ny>` followed
//! by `nx * ny` whitespace-separated values in row-major order. Values are
//! written with 17 significant digits, which round-trips every `f64`.

use std::fmt::Write as _;
use std::path::Path;

use meva_core::pde::GridFunction;

use crate::error::{io_err, CliError, Result};

const MAGIC: &str = "MEVA-GRID";
const VERSION: &str = "1";

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

pub fn to_string(g: &GridFunction) -> String {
    let mut s = format!("{MAGIC} {VERSION} {} {}\n", g.nx(), g.ny());
    for row in g.values().chunks(g.nx().max(1)) {
        let line: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        let _ = writeln!(s, "{}", line.join(" "));
    }
    s
}

fn bad(row: usize, col: usize, msg: impl Into<String>) -> CliError {
    CliError::ParseError { row, col, msg: msg.into() }
}

/// Parses a grid. Errors locate the offending token by line and
/// whitespace-separated position, both starting at 1.
pub fn from_str(text: &str) -> Result<GridFunction> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| bad(1, 1, "empty file"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 4 || h[0] != MAGIC {
        return Err(bad(1, 1, "expected `MEVA-GRID 1 <nx> <ny>`"));
    }
    if h[1] != VERSION {
        return Err(bad(1, 2, format!("unsupported version {}", h[1])));
    }
    let nx: usize = h[2].parse().map_err(|_| bad(1, 3, "nx is not an integer"))?;
    let ny: usize = h[3].parse().map_err(|_| bad(1, 4, "ny is not an integer"))?;
    let mut values = Vec::with_capacity(nx * ny);
    for (i, line) in lines {
        for (j, tok) in line.split_whitespace().enumerate() {
            let v: f64 = tok.parse().map_err(|_| bad(i + 1, j + 1, format!("`{tok}` is not a number")))?;
            values.push(v);
        }
    }
    if values.len() != nx * ny {
        return Err(bad(1, 3, format!("header promises {} values, found {}", nx * ny, values.len())));
    }
    Ok(GridFunction::new(nx, ny, values)?)
}

pub fn write(path: &Path, g: &GridFunction) -> Result<()> {
    std::fs::write(path, to_string(g)).map_err(io_err(path))
}

pub fn read(path: &Path) -> Result<GridFunction> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    from_str(&text)
}
