//! CSV schemas for trial records and cell statistics.

use std::io::{self, Write};
use std::path::Path;

use crate::harness::{CellStats, TrialRecord};

use super::CliError;

pub const TRIAL_HEADER: &str = "gamma,n,k,phi_trial,mdp_trial,e,e_td,e_br,b_td,b_br,td_singular";
pub const CELL_HEADER: &str = "gamma,n,k,td_win_ratio,bound_prediction_ratio,mean_td_over_br,mean_rel_td,mean_rel_br,singular_count,excluded_count";

/// `%.12g`-style rendering: 12 significant digits, trailing zeros trimmed.
pub fn fmt_sig(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exponent) = sci.split_once('e').expect("scientific format");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    if exponent < -5 || exponent >= DIGITS {
        format!("{}e{}", trim_zeros(mantissa), exponent)
    } else {
        let decimals = (DIGITS - 1 - exponent) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_sig).unwrap_or_default()
}

pub fn write_trials<W: Write>(out: &mut W, records: &[TrialRecord]) -> io::Result<()> {
    writeln!(out, "{TRIAL_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            fmt_sig(r.gamma),
            r.n,
            r.k,
            r.feature_trial,
            r.mdp_trial,
            fmt_sig(r.e),
            fmt_opt(r.e_td),
            fmt_opt(r.e_br),
            fmt_opt(r.b_td),
            fmt_opt(r.b_br),
            u8::from(r.td_singular)
        )?;
    }
    Ok(())
}

pub fn write_cells<W: Write>(out: &mut W, cells: &[CellStats]) -> io::Result<()> {
    writeln!(out, "{CELL_HEADER}")?;
    for c in cells {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt_sig(c.gamma),
            c.n,
            c.k,
            fmt_sig(c.td_win_ratio),
            fmt_sig(c.bound_prediction_ratio),
            fmt_opt(c.mean_ratio_td_over_br),
            fmt_opt(c.mean_rel_td),
            fmt_opt(c.mean_rel_br),
            c.singular_count,
            c.excluded_count
        )?;
    }
    Ok(())
}

/// One parsed row of a cell CSV. Missing statistics read as NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct CellRow {
    pub gamma: f64,
    pub n: usize,
    pub k: usize,
    pub td_win_ratio: f64,
    pub bound_prediction_ratio: f64,
    pub mean_td_over_br: f64,
    pub mean_rel_td: f64,
    pub mean_rel_br: f64,
    pub singular_count: usize,
    pub excluded_count: usize,
}

fn parse_field<T: std::str::FromStr>(
    record: &csv::StringRecord,
    index: usize,
    name: &str,
    line: u64,
) -> Result<T, CliError> {
    let raw = record.get(index).unwrap_or("").trim();
    raw.parse::<T>()
        .map_err(|_| CliError::Input(format!("line {line}: bad {name} value {raw:?}")))
}

fn parse_stat(record: &csv::StringRecord, index: usize, name: &str, line: u64) -> Result<f64, CliError> {
    if record.get(index).unwrap_or("").trim().is_empty() {
        Ok(f64::NAN)
    } else {
        parse_field(record, index, name, line)
    }
}

pub fn read_cells(path: &Path) -> Result<Vec<CellRow>, CliError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        .clone();
    let expected: Vec<&str> = CELL_HEADER.split(',').collect();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(CliError::Input(format!(
            "{}: header does not match the cell schema ({CELL_HEADER})",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        rows.push(CellRow {
            gamma: parse_field(&rec, 0, "gamma", line)?,
            n: parse_field(&rec, 1, "n", line)?,
            k: parse_field(&rec, 2, "k", line)?,
            td_win_ratio: parse_stat(&rec, 3, "td_win_ratio", line)?,
            bound_prediction_ratio: parse_stat(&rec, 4, "bound_prediction_ratio", line)?,
            mean_td_over_br: parse_stat(&rec, 5, "mean_td_over_br", line)?,
            mean_rel_td: parse_stat(&rec, 6, "mean_rel_td", line)?,
            mean_rel_br: parse_stat(&rec, 7, "mean_rel_br", line)?,
            singular_count: parse_field(&rec, 8, "singular_count", line)?,
            excluded_count: parse_field(&rec, 9, "excluded_count", line)?,
        });
    }
    Ok(rows)
}
