//! Plain-text matrices: one row per line, entries separated by commas and/or
//! whitespace. Blank lines and `#` comments are skipped.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::CliError;

pub fn parse_matrix(text: &str, source: &str) -> Result<DMatrix<f64>, CliError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row_index = rows.len();
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|tok| !tok.is_empty())
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| {
                    CliError::Input(format!(
                        "{source}: line {}, row {row_index}: cannot parse {tok:?} as a number",
                        line_no + 1
                    ))
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(CliError::Input(format!(
                    "{source}: line {}, row {row_index} has {} entries, expected {}",
                    line_no + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Input(format!("{source}: no data rows")));
    }
    let cols = rows[0].len();
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(rows.len(), cols, &flat))
}

/// A vector may be written as a single row or a single column.
pub fn parse_vector(text: &str, source: &str) -> Result<DVector<f64>, CliError> {
    let m = parse_matrix(text, source)?;
    if m.nrows() == 1 || m.ncols() == 1 {
        Ok(DVector::from_iterator(m.len(), m.transpose().iter().copied()))
    } else {
        Err(CliError::Input(format!(
            "{source}: expected a vector, found a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )))
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>, CliError> {
    parse_matrix(&read_text(path)?, &path.display().to_string())
}

pub fn read_vector(path: &Path) -> Result<DVector<f64>, CliError> {
    parse_vector(&read_text(path)?, &path.display().to_string())
}

/// Rows of 17-significant-digit numbers; parses back bit-identically.
pub fn format_matrix(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<(), CliError> {
    fs::write(path, format_matrix(m))
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}
