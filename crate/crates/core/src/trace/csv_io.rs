use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::TraceError;
use crate::model::{RateTrace, TraceEvent};

pub const TRACE_CSV_HEADER: [&str; 4] = ["event", "rate_mbps", "dirty_mbps", "gap_s"];

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    event: usize,
    rate_mbps: f64,
    dirty_mbps: f64,
    gap_s: f64,
}

/// Parses trace CSV. Event numbers must run 1, 2, 3, … in file order.
/// The trace is returned unvalidated; see [`crate::model::ContainerProfile::check`].
pub fn parse_trace_csv<R: Read>(reader: R, source: &str) -> Result<RateTrace, TraceError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| TraceError::schema(format!("{source}:1"), e.to_string()))?
        .clone();
    if header.iter().collect::<Vec<_>>() != TRACE_CSV_HEADER {
        return Err(TraceError::schema(
            format!("{source}:1"),
            format!("expected header `{}`", TRACE_CSV_HEADER.join(",")),
        ));
    }
    let mut events = Vec::new();
    for (i, row) in rdr.deserialize::<Row>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| TraceError::schema(format!("{source}:{line}"), e.to_string()))?;
        if row.event != i + 1 {
            return Err(TraceError::schema(
                format!("{source}:{line}"),
                format!("expected event {}, found {}", i + 1, row.event),
            ));
        }
        events.push(TraceEvent { rate_mbps: row.rate_mbps, dirty_mbps: row.dirty_mbps, gap_s: row.gap_s });
    }
    Ok(RateTrace::new(events))
}

pub fn read_trace_csv(path: &Path) -> Result<RateTrace, TraceError> {
    let file = File::open(path).map_err(|e| TraceError::io(path, e))?;
    parse_trace_csv(file, &path.display().to_string())
}

fn to_writer<W: Write>(writer: W, trace: &RateTrace) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for (i, e) in trace.events.iter().enumerate() {
        wtr.serialize(Row { event: i + 1, rate_mbps: e.rate_mbps, dirty_mbps: e.dirty_mbps, gap_s: e.gap_s })?;
    }
    if trace.events.is_empty() {
        wtr.write_record(TRACE_CSV_HEADER)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_trace_csv(path: &Path, trace: &RateTrace) -> Result<(), TraceError> {
    let file = File::create(path).map_err(|e| TraceError::io(path, e))?;
    to_writer(file, trace).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => TraceError::io(path, io),
        other => TraceError::schema(path.display().to_string(), format!("{other:?}")),
    })
}
