//! CSV formats: dense matrices, flatness profiles and trajectories.
//!
//! Numbers use the shortest representation that parses back to the same
//! `f64`, so output is byte-stable and lossless. `NaN` is written as an empty
//! field.

use std::fmt::Write as _;

use crate::conservation::TrajectoryRecord;
use crate::error::{FlatError, Result};
use crate::linalg::Mat;
use crate::profiler::FlatnessProfile;

pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:?}")
    }
}

fn join(vals: impl IntoIterator<Item = f64>) -> String {
    vals.into_iter().map(fmt_f64).collect::<Vec<_>>().join(",")
}

fn bad_csv(reason: String) -> FlatError {
    FlatError::InvalidArgument { field: "matrix", reason }
}

/// Header `rows,cols`, then one line per row.
pub fn write_matrix_csv(m: &Mat) -> String {
    let mut s = format!("{},{}\n", m.rows(), m.cols());
    for i in 0..m.rows() {
        s.push_str(&join(m.row(i).iter().copied()));
        s.push('\n');
    }
    s
}

pub fn parse_matrix_csv(text: &str) -> Result<Mat> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines.next().ok_or_else(|| bad_csv("empty matrix file".into()))?;
    let dims: Vec<usize> = header
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad_csv(format!("header `{header}` is not `rows,cols`")))?;
    let [rows, cols] = dims[..] else {
        return Err(bad_csv(format!("header `{header}` is not `rows,cols`")));
    };
    if rows == 0 || cols == 0 {
        return Err(bad_csv("matrix must be nonempty".into()));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for (i, line) in lines.enumerate() {
        if i >= rows {
            return Err(bad_csv(format!("more than {rows} data rows")));
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad_csv(format!("row {} is not numeric", i + 1)))?;
        if row.len() != cols {
            return Err(bad_csv(format!("row {} has {} entries, expected {cols}", i + 1, row.len())));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(bad_csv(format!("row {} has a non-finite entry", i + 1)));
        }
        data.extend(row);
    }
    if data.len() != rows * cols {
        return Err(bad_csv(format!("expected {rows} data rows, got {}", data.len() / cols)));
    }
    Ok(Mat::from_vec(rows, cols, data))
}

/// `r,fcirc,w1..wn` per radius (witness offsets `w − x`), a blank line, then
/// `ell,fbar` per level.
pub fn write_profile_csv(p: &FlatnessProfile) -> String {
    let n = p.base.len();
    let mut s = String::from("r,fcirc");
    for i in 1..=n {
        let _ = write!(s, ",w{i}");
    }
    s.push('\n');
    for ((r, v), w) in p.radii.iter().zip(&p.values).zip(&p.witnesses) {
        let off = w.iter().zip(&p.base).map(|(a, b)| a - b);
        let _ = writeln!(s, "{},{},{}", fmt_f64(*r), fmt_f64(*v), join(off));
    }
    s.push_str("\nell,fbar\n");
    for (l, d) in p.dual_levels.iter().zip(&p.dual_values) {
        let _ = writeln!(s, "{},{}", fmt_f64(*l), fmt_f64(*d));
    }
    s
}

/// `t,x1..xn,f,c,coeff` per record.
pub fn write_trajectory_csv(tr: &TrajectoryRecord) -> String {
    let n = tr.states.first().map_or(0, Vec::len);
    let mut s = String::from("t");
    for i in 1..=n {
        let _ = write!(s, ",x{i}");
    }
    s.push_str(",f,c,coeff\n");
    for k in 0..tr.len() {
        let coeff = tr.coeff_values.as_ref().map_or(f64::NAN, |c| c[k]);
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            fmt_f64(tr.times[k]),
            join(tr.states[k].iter().copied()),
            fmt_f64(tr.f_values[k]),
            fmt_f64(tr.c_values[k]),
            fmt_f64(coeff)
        );
    }
    s
}
