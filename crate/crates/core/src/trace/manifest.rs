//! Fleet manifest (JSON) reading and writing.
//!
//! ```json
//! {
//!   "total_bandwidth_mbps": 1000,
//!   "method": {"precopy": {"rounds": 10, "inter_round_delay_s": 0.1}},
//!   "containers": [
//!     {"id": "a", "memory_mb": 200, "handoff_rate_mbps": 50,
//!      "averaged": {"avg_rate_mbps": 50, "avg_dirty_mbps": 10}},
//!     {"id": "b", "memory_mb": 300, "handoff_rate_mbps": 50, "trace_file": "b.csv"}
//!   ]
//! }
//! ```
//!
//! An averaged container without `inter_round_delay_s` takes the method's
//! delay (`inter_round_delay_s` for pre-copy, `event_gap_s` for mirroring).
//! Trace paths are relative to the manifest's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::csv_io::{read_trace_csv, write_trace_csv};
use super::synth::{derive_seed, generate_paired_trace, generate_trace, Distribution, Ordering, SynthSpec};
use super::TraceError;
use crate::fleet::{FleetError, FleetSpec, Method};
use crate::model::{AveragedParams, ContainerProfile, HandoffPolicy, ParamMode, RateTrace};

/// Inter-round delay used when a manifest does not give one.
pub const DEFAULT_INTER_ROUND_DELAY_S: f64 = 0.1;
/// Gap between mirroring events used when a manifest does not give one.
pub const DEFAULT_EVENT_GAP_S: f64 = 0.01;

fn default_delay() -> f64 {
    DEFAULT_INTER_ROUND_DELAY_S
}

fn default_gap() -> f64 {
    DEFAULT_EVENT_GAP_S
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub total_bandwidth_mbps: f64,
    pub method: MethodEntry,
    pub containers: Vec<ContainerEntry>,
    /// Generator settings, present when the traces were synthesized.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthBlock>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodEntry {
    Precopy {
        rounds: u32,
        #[serde(default = "default_delay")]
        inter_round_delay_s: f64,
    },
    Migrror {
        policy: HandoffPolicy,
        #[serde(default = "default_gap")]
        event_gap_s: f64,
    },
}

impl MethodEntry {
    fn default_delay(&self) -> f64 {
        match *self {
            MethodEntry::Precopy { inter_round_delay_s, .. } => inter_round_delay_s,
            MethodEntry::Migrror { event_gap_s, .. } => event_gap_s,
        }
    }

    fn method(&self) -> Method {
        match *self {
            MethodEntry::Precopy { rounds, .. } => Method::Precopy { rounds },
            MethodEntry::Migrror { policy, .. } => Method::Migrror { policy },
        }
    }

    pub fn from_method(method: Method) -> Self {
        match method {
            Method::Precopy { rounds } => MethodEntry::Precopy { rounds, inter_round_delay_s: DEFAULT_INTER_ROUND_DELAY_S },
            Method::Migrror { policy } => MethodEntry::Migrror { policy, event_gap_s: DEFAULT_EVENT_GAP_S },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainerEntry {
    pub id: String,
    pub memory_mb: f64,
    pub handoff_rate_mbps: f64,
    #[serde(flatten)]
    pub params: ContainerParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContainerParams {
    Averaged(AveragedEntry),
    TraceFile(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragedEntry {
    pub avg_rate_mbps: f64,
    pub avg_dirty_mbps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inter_round_delay_s: Option<f64>,
}

/// Settings to regenerate a manifest's synthetic traces. Repeat `r` uses base
/// seed `seed + r`; repeat 0 reproduces the files as written.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthBlock {
    pub seed: u64,
    pub length: usize,
    pub rate: Distribution,
    pub dirty: Distribution,
    pub gap: Distribution,
    pub dirty_ordering: Ordering,
    pub memory: Distribution,
}

impl SynthBlock {
    /// Memory sizes and traces for `count` containers.
    pub fn generate(&self, count: usize, repeat: u64) -> Result<Vec<(f64, RateTrace)>, TraceError> {
        if count == 0 {
            return Err(TraceError::InvalidSpec("container count must be at least 1".into()));
        }
        let base = self.seed.wrapping_add(repeat);
        let memory_by_container = generate_trace(&SynthSpec {
            length: count,
            distribution: self.memory,
            ordering: Ordering::Shuffled,
            seed: derive_seed(base, 0),
        })?;
        if memory_by_container.iter().any(|&m| !(m > 0.0)) {
            return Err(TraceError::InvalidSpec("memory sizes must be positive".into()));
        }
        (0..count)
            .map(|i| {
                let stream = 1 + 3 * i as u64;
                let spec = |distribution, ordering, k: u64| SynthSpec {
                    length: self.length,
                    distribution,
                    ordering,
                    seed: derive_seed(base, stream + k),
                };
                let trace = generate_paired_trace(
                    &spec(self.rate, Ordering::Shuffled, 0),
                    &spec(self.dirty, self.dirty_ordering, 1),
                    &spec(self.gap, Ordering::Shuffled, 2),
                )?;
                Ok((memory_by_container[i], trace))
            })
            .collect()
    }
}

fn json_error(source: &str, e: serde_json::Error) -> TraceError {
    TraceError::schema(format!("{source}:{}:{}", e.line(), e.column()), e.to_string())
}

/// Turns a manifest into a validated fleet, loading trace files relative to
/// `base_dir`.
pub fn resolve_manifest(manifest: &Manifest, base_dir: &Path) -> Result<FleetSpec, TraceError> {
    let delay = manifest.method.default_delay();
    let mut containers = Vec::with_capacity(manifest.containers.len());
    for (i, entry) in manifest.containers.iter().enumerate() {
        let params = match &entry.params {
            ContainerParams::Averaged(avg) => ParamMode::Averaged(AveragedParams {
                avg_rate_mbps: avg.avg_rate_mbps,
                avg_dirty_mbps: avg.avg_dirty_mbps,
                inter_round_delay_s: avg.inter_round_delay_s.unwrap_or(delay),
            }),
            ContainerParams::TraceFile(path) => {
                if path.as_os_str().is_empty() {
                    return Err(TraceError::schema(format!("containers[{i}].trace_file"), "empty path"));
                }
                ParamMode::Traced(read_trace_csv(&base_dir.join(path))?)
            }
        };
        containers.push(ContainerProfile {
            id: entry.id.clone(),
            memory_mb: entry.memory_mb,
            handoff_rate_mbps: entry.handoff_rate_mbps,
            params,
        });
    }
    let spec = FleetSpec {
        containers,
        total_bandwidth_mbps: manifest.total_bandwidth_mbps,
        method: manifest.method.method(),
    };
    spec.check().map_err(|e| match e {
        FleetError::Container { id, source } => TraceError::ValidationFailed { id, source },
        FleetError::ZeroContainers => TraceError::schema("containers", "at least one container is required"),
        FleetError::NonPositiveBandwidth(b) => {
            TraceError::schema("total_bandwidth_mbps", format!("must be positive, got {b}"))
        }
        FleetError::InvalidMethod(source) => TraceError::schema("method", source.to_string()),
    })?;
    Ok(spec)
}

pub fn parse_fleet_manifest_str(text: &str, source: &str, base_dir: &Path) -> Result<(Manifest, FleetSpec), TraceError> {
    let manifest: Manifest = serde_json::from_str(text).map_err(|e| json_error(source, e))?;
    let spec = resolve_manifest(&manifest, base_dir)?;
    Ok((manifest, spec))
}

pub fn parse_fleet_manifest(path: &Path) -> Result<FleetSpec, TraceError> {
    let text = std::fs::read_to_string(path).map_err(|e| TraceError::io(path, e))?;
    let base_dir = path.parent().unwrap_or_else(|| Path::new("."));
    Ok(parse_fleet_manifest_str(&text, &path.display().to_string(), base_dir)?.1)
}

/// Trace file name used for container `index` when writing a manifest.
pub fn trace_file_name(index: usize) -> String {
    format!("trace_{index:04}.csv")
}

/// Writes `spec` as a manifest at `path`; traced containers are written as
/// CSV files next to it. Averaged containers carry their delay explicitly.
pub fn write_fleet_manifest(spec: &FleetSpec, path: &Path, synth: Option<SynthBlock>) -> Result<(), TraceError> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut containers = Vec::with_capacity(spec.containers.len());
    for (i, c) in spec.containers.iter().enumerate() {
        let params = match &c.params {
            ParamMode::Averaged(avg) => ContainerParams::Averaged(AveragedEntry {
                avg_rate_mbps: avg.avg_rate_mbps,
                avg_dirty_mbps: avg.avg_dirty_mbps,
                inter_round_delay_s: Some(avg.inter_round_delay_s),
            }),
            ParamMode::Traced(trace) => {
                let name = trace_file_name(i);
                write_trace_csv(&dir.join(&name), trace)?;
                ContainerParams::TraceFile(PathBuf::from(name))
            }
        };
        containers.push(ContainerEntry {
            id: c.id.clone(),
            memory_mb: c.memory_mb,
            handoff_rate_mbps: c.handoff_rate_mbps,
            params,
        });
    }
    let manifest = Manifest {
        total_bandwidth_mbps: spec.total_bandwidth_mbps,
        method: MethodEntry::from_method(spec.method),
        containers,
        synth,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| TraceError::io(path, e))
}
