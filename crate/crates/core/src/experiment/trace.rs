//! CSV checkpoint traces.

use std::io::{Read, Write};
use std::path::Path;

use crate::engine::Checkpoint;
use crate::error::{Error, Result};

pub const TRACE_HEADER: [&str; 6] = ["t", "epoch", "step", "lambda", "cumulative_regret", "online_infidelity"];

/// 17 significant digits, enough to round-trip any `f64`.
fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

pub fn write_trace<W: Write>(trace: &[Checkpoint], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRACE_HEADER)?;
    for c in trace {
        out.write_record([
            c.t.to_string(),
            c.epoch.to_string(),
            c.step.to_string(),
            fmt_opt(c.lambda),
            fmt_float(c.cumulative_regret),
            fmt_opt(c.online_infidelity),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn emit_trace(trace: &[Checkpoint], path: &Path) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_trace(trace, file)
}

pub fn read_trace<R: Read>(r: R) -> Result<Vec<Checkpoint>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers()?.clone();
    if header.iter().ne(TRACE_HEADER) {
        return Err(Error::validation(format!("unexpected trace header {header:?}")));
    }
    let bad = |field: &str, e: &dyn std::fmt::Display| Error::validation(format!("trace field `{field}`: {e}"));
    let opt = |field: &str, s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|e| bad(field, &e))
        }
    };
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        out.push(Checkpoint {
            t: row[0].parse().map_err(|e| bad("t", &e))?,
            epoch: row[1].parse().map_err(|e| bad("epoch", &e))?,
            step: row[2].parse().map_err(|e| bad("step", &e))?,
            lambda: opt("lambda", &row[3])?,
            cumulative_regret: row[4].parse().map_err(|e| bad("cumulative_regret", &e))?,
            online_infidelity: opt("online_infidelity", &row[5])?,
        });
    }
    Ok(out)
}

pub fn load_trace(path: &Path) -> Result<Vec<Checkpoint>> {
    read_trace(std::io::BufReader::new(std::fs::File::open(path)?))
}
