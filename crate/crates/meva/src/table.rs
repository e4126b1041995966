//! CSV ingestion of regression tables and CSV writing of result tables.

use std::path::Path;

use meva_core::tabular::TabularDataset;

use crate::error::{io_err, CliError, Result};
use crate::grid::fmt_f64;

/// Treats empty cells and `NA`/`NaN` (any case) as missing.
fn is_missing(cell: &str) -> bool {
    let c = cell.trim();
    c.is_empty() || c.eq_ignore_ascii_case("na") || c.eq_ignore_ascii_case("nan")
}

/// Parses a regression table from CSV text with a header row. Rows with a
/// missing cell are dropped and counted; any other non-numeric cell is an
/// error located by its 1-based data row and column.
pub fn parse_csv<R: std::io::Read>(input: R, target: &str) -> Result<TabularDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if !header.iter().any(|h| h == target) {
        return Err(CliError::MissingColumn(target.to_string()));
    }
    let mut records = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let mut row = Vec::with_capacity(rec.len());
        for (j, cell) in rec.iter().enumerate() {
            if is_missing(cell) {
                row.push(None);
            } else {
                let v: f64 = cell.parse().map_err(|_| CliError::ParseError {
                    row: i + 1,
                    col: j + 1,
                    msg: format!("`{cell}` is not a number"),
                })?;
                row.push(Some(v));
            }
        }
        records.push(row);
    }
    Ok(TabularDataset::from_records(&header, &records, target)?)
}

pub fn load_csv(path: &Path, target: &str) -> Result<TabularDataset> {
    let f = std::fs::File::open(path).map_err(io_err(path))?;
    parse_csv(f, target)
}

/// Writes the feature columns followed by the target column.
pub fn write_dataset(path: &Path, ds: &TabularDataset) -> Result<()> {
    let mut header: Vec<String> = ds.names().to_vec();
    header.push(ds.target_name().to_string());
    let rows = (0..ds.len()).map(|i| {
        let mut r: Vec<String> = ds.row(i).iter().map(|&v| fmt_f64(v)).collect();
        r.push(fmt_f64(ds.targets()[i]));
        r
    });
    write_table(path, &header, rows)
}

/// Writes raw rows (target last) under `header`.
pub fn write_rows(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    write_table(path, header, rows.iter().map(|r| r.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>()))
}

/// Writes a CSV with `,` separators and LF line endings.
pub fn write_table<H, I, R, S>(path: &Path, header: &[H], rows: I) -> Result<()>
where
    H: AsRef<str>,
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let f = std::fs::File::create(path).map_err(io_err(path))?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(f);
    w.write_record(header.iter().map(|h| h.as_ref()))?;
    for r in rows {
        w.write_record(r.into_iter().map(|s| s.as_ref().to_string()))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Header and string cells of a CSV file.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let f = std::fs::File::open(path).map_err(io_err(path))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(f);
    let header = rdr.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        rows.push(rec?.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}
