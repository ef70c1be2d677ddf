use std::io::{self, BufRead, Write};

use crate::format::num;

pub const TRACE_HEADER: &str = "iter,time,cost,residual_inf,alpha,energy,x_min,x_max,dist_inf,lyap_h";

/// One row of a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iter: u64,
    pub time: f64,
    pub cost: f64,
    pub residual_inf: f64,
    pub alpha: Option<f64>,
    pub energy: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub dist_inf: Option<f64>,
    pub lyap_h: Option<f64>,
}

impl TraceRecord {
    pub fn to_csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.iter,
            num(self.time),
            num(self.cost),
            num(self.residual_inf),
            opt(self.alpha),
            num(self.energy),
            num(self.x_min),
            num(self.x_max),
            opt(self.dist_inf),
            opt(self.lyap_h),
        )
    }
}

pub fn write_trace_csv<W: Write>(records: &[TraceRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.to_csv_row())?;
    }
    out.flush()
}

fn parse_field(s: &str, line: usize) -> io::Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| io::Error::new(io::ErrorKind::InvalidData, format!("line {line}: bad number {s:?}")))
}

fn parse_opt(s: &str, line: usize) -> io::Result<Option<f64>> {
    if s.trim().is_empty() {
        Ok(None)
    } else {
        parse_field(s, line).map(Some)
    }
}

pub fn read_trace_csv<R: BufRead>(input: R) -> io::Result<Vec<TraceRecord>> {
    let mut lines = input.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != TRACE_HEADER {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "unexpected trace header"));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 2;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 10 {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                format!("line {lineno}: expected 10 fields, got {}", f.len()),
            ));
        }
        out.push(TraceRecord {
            iter: f[0].trim().parse().map_err(|_| {
                io::Error::new(io::ErrorKind::InvalidData, format!("line {lineno}: bad iteration"))
            })?,
            time: parse_field(f[1], lineno)?,
            cost: parse_field(f[2], lineno)?,
            residual_inf: parse_field(f[3], lineno)?,
            alpha: parse_opt(f[4], lineno)?,
            energy: parse_field(f[5], lineno)?,
            x_min: parse_field(f[6], lineno)?,
            x_max: parse_field(f[7], lineno)?,
            dist_inf: parse_opt(f[8], lineno)?,
            lyap_h: parse_opt(f[9], lineno)?,
        });
    }
    Ok(out)
}

/// Checks `residual_inf(k) = (1-h)^k residual_inf(0)` on every row within
/// `rel_tol * max(residual_inf(0), 1)`; returns the first offending iteration.
/// The floor of one keeps round-off on feasible starts from counting as
/// deviation, since integer data has `||b||_inf >= 1`.
pub fn check_residual_geometry(records: &[TraceRecord], h: f64, rel_tol: f64) -> Result<(), u64> {
    let Some(first) = records.first() else {
        return Ok(());
    };
    let r0 = first.residual_inf;
    for r in records {
        let k = (r.iter - first.iter) as i32;
        let expected = (1.0 - h).powi(k) * r0;
        if (r.residual_inf - expected).abs() > rel_tol * r0.max(1.0) {
            return Err(r.iter);
        }
    }
    Ok(())
}
