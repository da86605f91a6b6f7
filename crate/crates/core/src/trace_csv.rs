//! CSV form of a trace.
//!
//! Floats are written in Rust's shortest round-trip exponent form
//! (`8e0`, `5.714285714285714e-1`), which does not depend on locale.

use std::io::{Read, Write};

use thiserror::Error;

use crate::sim::TraceRecord;

pub const CSV_HEADER: [&str; 14] = [
    "t", "iL1", "iL2", "Vo", "d1", "d2", "d2_dot", "e", "e2", "V1_lyap", "V2_lyap", "R", "sat1",
    "sat2",
];

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("CSV has no header line")]
    EmptyFile,
    #[error("CSV header lacks column `{0}`")]
    MissingColumn(String),
    #[error("row {row}: {message}")]
    BadRow { row: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub fn write_trace<W: Write>(out: W, trace: &[TraceRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in trace {
        let flag = |b: bool| if b { "1" } else { "0" }.to_string();
        w.write_record([
            format!("{:e}", r.t),
            format!("{:e}", r.i_l1),
            format!("{:e}", r.i_l2),
            format!("{:e}", r.vo),
            format!("{:e}", r.d1),
            format!("{:e}", r.d2),
            format!("{:e}", r.d2_dot),
            format!("{:e}", r.e),
            format!("{:e}", r.e2),
            format!("{:e}", r.v1_lyap),
            format!("{:e}", r.v2_lyap),
            format!("{:e}", r.r_active),
            flag(r.sat1),
            flag(r.sat2),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Column names of a CSV file's first line.
pub fn read_header<R: Read>(input: R) -> Result<Vec<String>, FormatError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut rec = csv::StringRecord::new();
    if !rdr.read_record(&mut rec)? {
        return Err(FormatError::EmptyFile);
    }
    Ok(rec.iter().map(|s| s.trim().to_string()).collect())
}

/// Ensure every column in `required` is present.
pub fn require_columns(header: &[String], required: &[&str]) -> Result<(), FormatError> {
    match required.iter().find(|c| !header.iter().any(|h| h == *c)) {
        Some(c) => Err(FormatError::MissingColumn(c.to_string())),
        None => Ok(()),
    }
}

/// Read a trace written by [`write_trace`].
pub fn read_trace<R: Read>(input: R) -> Result<Vec<TraceRecord>, FormatError> {
    let mut rdr = csv::Reader::from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    require_columns(&header, &CSV_HEADER)?;
    let col = |name: &str| header.iter().position(|h| h == name).expect("checked");
    let idx: Vec<usize> = CSV_HEADER.iter().map(|c| col(c)).collect();

    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let num = |k: usize| -> Result<f64, FormatError> {
            let s = rec.get(idx[k]).unwrap_or("");
            s.parse::<f64>().map_err(|_| FormatError::BadRow {
                row,
                message: format!("`{}` is not a number: `{s}`", CSV_HEADER[k]),
            })
        };
        let flag = |k: usize| -> Result<bool, FormatError> {
            match rec.get(idx[k]) {
                Some("0") => Ok(false),
                Some("1") => Ok(true),
                other => Err(FormatError::BadRow {
                    row,
                    message: format!("`{}` must be 0 or 1, got {other:?}", CSV_HEADER[k]),
                }),
            }
        };
        out.push(TraceRecord {
            t: num(0)?,
            i_l1: num(1)?,
            i_l2: num(2)?,
            vo: num(3)?,
            d1: num(4)?,
            d2: num(5)?,
            d2_dot: num(6)?,
            e: num(7)?,
            e2: num(8)?,
            v1_lyap: num(9)?,
            v2_lyap: num(10)?,
            r_active: num(11)?,
            sat1: flag(12)?,
            sat2: flag(13)?,
        });
    }
    Ok(out)
}
