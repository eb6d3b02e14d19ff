//! CSV emission and parsing for traces and run summaries.
//!
//! Each file starts with `# key = value` comment lines echoing the effective
//! configuration, followed by a header row. Reals are written with 17
//! significant digits so every value re-parses to the identical `f64`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const TRACE_COLUMNS: [&str; 6] = ["run_id", "algo", "seed", "oracle_calls", "true_f", "extra"];
pub const SUMMARY_COLUMNS: [&str; 6] =
    ["run_id", "algo", "hyperparameters", "converged", "calls_to_tolerance", "best_f"];

/// Scientific notation with 17 significant digits.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub run_id: String,
    pub algo: String,
    pub seed: u64,
    pub oracle_calls: u64,
    pub true_f: f64,
    pub extra: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub run_id: String,
    pub algo: String,
    /// Canonical `key=value;...` string with keys in sorted order.
    pub hyperparameters: String,
    pub converged: bool,
    pub calls_to_tolerance: Option<u64>,
    pub best_f: f64,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io { path: path.display().to_string(), message: e.to_string() }
}

fn open_with_header(path: &Path, header: &[(String, String)]) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    for (k, v) in header {
        writeln!(w, "# {k} = {v}").map_err(|e| io_err(path, e))?;
    }
    Ok(csv::Writer::from_writer(w))
}

pub fn write_trace_csv<'a>(
    path: &Path,
    header: &[(String, String)],
    rows: impl IntoIterator<Item = &'a TraceRow>,
) -> Result<()> {
    let mut w = open_with_header(path, header)?;
    w.write_record(TRACE_COLUMNS).map_err(|e| io_err(path, e))?;
    for r in rows {
        let extra = r.extra.map(format_real).unwrap_or_default();
        w.write_record([
            r.run_id.as_str(),
            r.algo.as_str(),
            &r.seed.to_string(),
            &r.oracle_calls.to_string(),
            &format_real(r.true_f),
            &extra,
        ])
        .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_summary_csv<'a>(
    path: &Path,
    header: &[(String, String)],
    rows: impl IntoIterator<Item = &'a SummaryRow>,
) -> Result<()> {
    let mut w = open_with_header(path, header)?;
    w.write_record(SUMMARY_COLUMNS).map_err(|e| io_err(path, e))?;
    for r in rows {
        let calls = r.calls_to_tolerance.map(|c| c.to_string()).unwrap_or_default();
        w.write_record([
            r.run_id.as_str(),
            r.algo.as_str(),
            r.hyperparameters.as_str(),
            if r.converged { "1" } else { "0" },
            &calls,
            &format_real(r.best_f),
        ])
        .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn reader(path: &Path, columns: &[&str]) -> Result<csv::Reader<File>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).map_err(|e| io_err(path, e))?;
    let header = r.headers().map_err(|e| io_err(path, e))?;
    if header.iter().ne(columns.iter().copied()) {
        return Err(io_err(path, format!("unexpected columns {:?}", header.iter().collect::<Vec<_>>())));
    }
    Ok(r)
}

fn field<T: std::str::FromStr>(path: &Path, rec: &csv::StringRecord, i: usize) -> Result<T> {
    let s = rec.get(i).ok_or_else(|| io_err(path, format!("missing column {i}")))?;
    s.parse().map_err(|_| io_err(path, format!("cannot parse `{s}` in column {}", i + 1)))
}

fn optional<T: std::str::FromStr>(path: &Path, rec: &csv::StringRecord, i: usize) -> Result<Option<T>> {
    match rec.get(i) {
        Some("") | None => Ok(None),
        Some(_) => field(path, rec, i).map(Some),
    }
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRow>> {
    let mut r = reader(path, &TRACE_COLUMNS)?;
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| io_err(path, e))?;
            Ok(TraceRow {
                run_id: field(path, &rec, 0)?,
                algo: field(path, &rec, 1)?,
                seed: field(path, &rec, 2)?,
                oracle_calls: field(path, &rec, 3)?,
                true_f: field(path, &rec, 4)?,
                extra: optional(path, &rec, 5)?,
            })
        })
        .collect()
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = reader(path, &SUMMARY_COLUMNS)?;
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| io_err(path, e))?;
            let converged = match rec.get(3) {
                Some("1") => true,
                Some("0") => false,
                other => return Err(io_err(path, format!("converged must be 0 or 1, got {other:?}"))),
            };
            Ok(SummaryRow {
                run_id: field(path, &rec, 0)?,
                algo: field(path, &rec, 1)?,
                hyperparameters: field(path, &rec, 2)?,
                converged,
                calls_to_tolerance: optional(path, &rec, 4)?,
                best_f: field(path, &rec, 5)?,
            })
        })
        .collect()
}
