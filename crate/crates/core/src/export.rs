//! CSV time series.
//!
//! Matrix series store `t` followed by the real and imaginary parts of the upper
//! triangle, row-major, diagonal included: for 3x3 that is
//! `t,re_11,im_11,re_12,im_12,re_13,im_13,re_22,im_22,re_23,im_23,re_33,im_33`.
//! The lower triangle is the conjugate. Values carry 17 significant digits so a
//! round trip is exact.
//!
//! Scalar series use the long format `t,series,value`.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::{c, CMatrix};
use crate::trajectory::Trajectory;
use crate::verify::TimeGrid;

pub fn header(n: usize) -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    for i in 1..=n {
        for j in i..=n {
            cols.push(format!("re_{i}{j}"));
            cols.push(format!("im_{i}{j}"));
        }
    }
    cols
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_error(path: &Path, source: csv::Error) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Samples `traj` on the grid and writes one row per point.
pub fn write_timeseries(traj: &impl Trajectory, grid: &TimeGrid, path: &Path) -> Result<()> {
    let rows: Vec<(f64, CMatrix)> = grid
        .points()
        .map(|t| traj.sample(t).map(|m| (t, m)))
        .collect::<Result<_>>()?;
    write_samples(&rows, path)
}

pub fn write_samples(rows: &[(f64, CMatrix)], path: &Path) -> Result<()> {
    let n = rows.first().map_or(0, |(_, m)| m.nrows());
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header(n)).map_err(|e| csv_error(path, e))?;
    for (t, m) in rows {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch {
                left: n,
                right: m.nrows(),
            });
        }
        let mut rec = vec![fmt(*t)];
        for i in 0..n {
            for j in i..n {
                rec.push(fmt(m[(i, j)].re));
                rec.push(fmt(m[(i, j)].im));
            }
        }
        w.write_record(&rec).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

/// Reads a matrix series back, rebuilding the lower triangle by conjugation.
pub fn read_timeseries(path: &Path) -> Result<Vec<(f64, CMatrix)>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let malformed = |detail: String| Error::MalformedSeries {
        path: path.to_path_buf(),
        detail,
    };
    let cols = r.headers().map_err(|e| csv_error(path, e))?.len();
    // 1 + n (n + 1) columns
    let n = (1..=16)
        .find(|n| 1 + n * (n + 1) == cols)
        .ok_or_else(|| malformed(format!("{cols} columns is not 1 + n(n+1)")))?;
    let expected = header(n);
    if r.headers().map_err(|e| csv_error(path, e))?.iter().ne(expected.iter().map(String::as_str)) {
        return Err(malformed("unexpected header".into()));
    }
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| malformed(format!("row {}: {e}", line + 2)))?;
        let mut m = CMatrix::zeros(n, n);
        let mut k = 1;
        for i in 0..n {
            for j in i..n {
                m[(i, j)] = c(vals[k], vals[k + 1]);
                if i != j {
                    m[(j, i)] = m[(i, j)].conj();
                }
                k += 2;
            }
        }
        out.push((vals[0], m));
    }
    Ok(out)
}

/// One `t,series,value` row.
#[derive(Debug, Clone, PartialEq)]
pub struct LongRow {
    pub t: f64,
    pub series: &'static str,
    pub value: f64,
}

pub fn write_long(rows: &[LongRow], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| io_error(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "t,series,value").map_err(|e| io_error(path, e))?;
    for r in rows {
        writeln!(w, "{},{},{}", fmt(r.t), r.series, fmt(r.value)).map_err(|e| io_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}
