//! Trace ingestion and serialization, summary statistics, synthetic trace
//! generation and mean-preserving reorderings.

mod csv_io;
mod manifest;
mod stats;
mod synth;

use thiserror::Error;

pub use csv_io::{parse_trace_csv, read_trace_csv, write_trace_csv, TRACE_CSV_HEADER};
pub use manifest::{
    parse_fleet_manifest, parse_fleet_manifest_str, resolve_manifest, write_fleet_manifest, ContainerEntry,
    ContainerParams, Manifest, MethodEntry, SynthBlock, DEFAULT_EVENT_GAP_S, DEFAULT_INTER_ROUND_DELAY_S,
};
pub use stats::{mean, mean_preserving_permutations, trace_stats, TraceStats};
pub use synth::{generate_paired_trace, generate_trace, Distribution, Ordering, SynthSpec};

use crate::error::ModelError;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{location}: {message}")]
    SchemaViolation { location: String, message: String },
    #[error("container {id}: {source}")]
    ValidationFailed {
        id: String,
        #[source]
        source: ModelError,
    },
    #[error("series is empty")]
    EmptySeries,
    #[error("invalid synthesis spec: {0}")]
    InvalidSpec(String),
}

impl TraceError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        TraceError::Io { path: path.display().to_string(), source }
    }

    pub(crate) fn schema(location: impl Into<String>, message: impl Into<String>) -> Self {
        TraceError::SchemaViolation { location: location.into(), message: message.into() }
    }
}
