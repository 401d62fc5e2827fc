use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const TRACE_HEADER: &str = "passes,objective,grad_norm_sq,wall_seconds,epoch";

/// Metrics at one checkpoint of a run.
///
/// `passes` counts the component-gradient work the optimizer spent to reach
/// the recorded iterate, in units of `n` component gradients. Evaluating the
/// checkpoint itself is not charged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub passes: f64,
    pub objective: f64,
    pub grad_norm_sq: f64,
    pub wall_seconds: f64,
    pub epoch: u64,
}

fn validate(records: &[TraceRecord]) -> Result<()> {
    let mut prev = 0.0f64;
    for (k, r) in records.iter().enumerate() {
        if !(r.passes >= 0.0 && r.passes.is_finite()) {
            return Err(Error::InvalidTrace(format!("row {k}: passes {} not a finite non-negative number", r.passes)));
        }
        if r.passes < prev {
            return Err(Error::InvalidTrace(format!("row {k}: passes decreased from {prev} to {}", r.passes)));
        }
        if !(r.grad_norm_sq >= 0.0) || !(r.wall_seconds >= 0.0) {
            return Err(Error::InvalidTrace(format!("row {k}: negative or NaN metric")));
        }
        prev = r.passes;
    }
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidTrace(format!("{other:?}")),
    }
}

/// Writes the CSV trace. Floats use the shortest representation that parses
/// back to the same bits, so a round trip is exact.
pub fn write_trace<W: Write>(records: &[TraceRecord], sink: W) -> Result<()> {
    write_trace_with_comments(&[], records, sink)
}

/// Like [`write_trace`], preceded by `# `-prefixed comment lines.
pub fn write_trace_with_comments<W: Write>(comments: &[String], records: &[TraceRecord], mut sink: W) -> Result<()> {
    validate(records)?;
    for c in comments {
        for line in c.lines() {
            writeln!(sink, "# {line}")?;
        }
    }
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(TRACE_HEADER.split(',')).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.passes.to_string(),
            r.objective.to_string(),
            r.grad_norm_sq.to_string(),
            r.wall_seconds.to_string(),
            r.epoch.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a trace CSV, skipping `#` comment lines and checking the header.
pub fn read_trace<R: Read>(reader: R) -> Result<Vec<TraceRecord>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(reader);
    let header = rdr.headers().map_err(csv_err)?;
    if header.iter().collect::<Vec<_>>().join(",") != TRACE_HEADER {
        return Err(Error::InvalidTrace(format!("unexpected header '{}'", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut out = Vec::new();
    for (k, row) in rdr.records().enumerate() {
        let row = row.map_err(csv_err)?;
        let num = |j: usize| -> Result<f64> {
            row[j].trim().parse().map_err(|_| Error::InvalidTrace(format!("row {k}: bad number '{}'", &row[j])))
        };
        out.push(TraceRecord {
            passes: num(0)?,
            objective: num(1)?,
            grad_norm_sq: num(2)?,
            wall_seconds: num(3)?,
            epoch: row[4].trim().parse().map_err(|_| Error::InvalidTrace(format!("row {k}: bad epoch '{}'", &row[4])))?,
        });
    }
    validate(&out)?;
    Ok(out)
}
