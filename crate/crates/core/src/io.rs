//! Comma-separated numeric input and output.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::Dataset;

/// Reads a headerless numeric table. Row numbers in errors are 1-based
/// file lines, counting a skipped header.
pub fn read_matrix<R: Read>(reader: R, skip_header: bool) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(skip_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            row: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let row = record.position().map_or(rows.len() + 1, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let values = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|_| Error::Parse {
                    row,
                    message: format!("'{field}' is not a number"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse {
                row,
                message: "non-finite value".into(),
            });
        }
        if let Some(first) = rows.first() {
            if first.len() != values.len() {
                return Err(Error::Parse {
                    row,
                    message: format!("expected {} fields, found {}", first.len(), values.len()),
                });
            }
        }
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            row: 0,
            message: "no data rows".into(),
        });
    }
    Ok(rows)
}

pub fn read_matrix_file(path: &Path, skip_header: bool) -> Result<Vec<Vec<f64>>> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_matrix(file, skip_header)
}

/// Design from one file, response from another (single column).
pub fn load_split(x_path: &Path, y_path: Option<&Path>, skip_header: bool) -> Result<Dataset> {
    let rows = read_matrix_file(x_path, skip_header)?;
    let y = match y_path {
        Some(path) => {
            let ycols = read_matrix_file(path, skip_header)?;
            if ycols[0].len() != 1 {
                return Err(Error::Dimension(format!(
                    "response file has {} columns, expected 1",
                    ycols[0].len()
                )));
            }
            ycols.into_iter().map(|r| r[0]).collect()
        }
        None => vec![0.0; rows.len()],
    };
    Dataset::from_rows(&rows, y)
}

/// Combined file whose last column is the response.
pub fn load_combined(path: &Path, skip_header: bool) -> Result<Dataset> {
    let rows = read_matrix_file(path, skip_header)?;
    if rows[0].len() < 2 {
        return Err(Error::Dimension("combined file needs at least two columns".into()));
    }
    let (x, y): (Vec<Vec<f64>>, Vec<f64>) = rows
        .into_iter()
        .map(|mut r| {
            let y = r.pop().unwrap_or_default();
            (r, y)
        })
        .unzip();
    Dataset::from_rows(&x, y)
}

/// Writes a vector as one value per line.
pub fn write_column<W: Write>(mut out: W, values: &[f64]) -> Result<()> {
    for v in values {
        writeln!(out, "{v}")?;
    }
    Ok(())
}
