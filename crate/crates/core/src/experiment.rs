//! Sweep harness and comparisons behind the command-line tool.
//!
//! A sweep clones a base fleet, overrides one parameter on every container,
//! and runs pre-copy and/or mirroring on the result. Mirroring hands off at
//! the same moment as the paired pre-copy run unless another policy is given.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ModelError;
use crate::fleet::{order_free_sum, run_fleet, FleetError, FleetOutcome, FleetSpec, Method};
use crate::migrror::migrror_outcome;
use crate::model::{ContainerProfile, HandoffPolicy, MigrationOutcome, ParamMode, RateTrace, TraceEvent};
use crate::precopy::DEFAULT_ROUNDS;
use crate::trace::{mean, SynthBlock, TraceError, DEFAULT_EVENT_GAP_S, DEFAULT_INTER_ROUND_DELAY_S};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment: {0}")]
    InvalidSpec(String),
    #[error("container {0} has no trace")]
    NotTraced(String),
    #[error(transparent)]
    Fleet(#[from] FleetError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    MemoryMb,
    TransferRateMbps,
    DirtyRateMbps,
    Lambda,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::MemoryMb => "memory_mb",
            SweepParameter::TransferRateMbps => "transfer_rate_mbps",
            SweepParameter::DirtyRateMbps => "dirty_rate_mbps",
            SweepParameter::Lambda => "lambda",
        }
    }
}

impl std::str::FromStr for SweepParameter {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "memory_mb" => Ok(SweepParameter::MemoryMb),
            "transfer_rate_mbps" => Ok(SweepParameter::TransferRateMbps),
            "dirty_rate_mbps" => Ok(SweepParameter::DirtyRateMbps),
            "lambda" => Ok(SweepParameter::Lambda),
            other => Err(ExperimentError::InvalidSpec(format!("unknown sweep parameter `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

impl SweepAxis {
    pub fn new(parameter: SweepParameter, values: Vec<f64>) -> Result<Self, ExperimentError> {
        let axis = Self { parameter, values };
        axis.check()?;
        Ok(axis)
    }

    /// `steps` evenly spaced values from `start` to `stop` inclusive.
    pub fn linear(parameter: SweepParameter, start: f64, stop: f64, steps: usize) -> Result<Self, ExperimentError> {
        let values = match steps {
            0 => vec![],
            1 => vec![start],
            n => (0..n).map(|i| start + (stop - start) * i as f64 / (n - 1) as f64).collect(),
        };
        Self::new(parameter, values)
    }

    pub fn check(&self) -> Result<(), ExperimentError> {
        if self.values.is_empty() {
            return Err(ExperimentError::InvalidSpec("sweep axis has no values".into()));
        }
        if let Some(v) = self.values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(ExperimentError::InvalidSpec(format!("axis values must be positive, got {v}")));
        }
        if self.parameter == SweepParameter::Lambda {
            if let Some(v) = self.values.iter().find(|v| **v >= 1.0) {
                return Err(ExperimentError::InvalidSpec(format!("lambda values must be below 1, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    Precopy,
    Migrror,
}

impl MethodKind {
    pub fn name(self) -> &'static str {
        match self {
            MethodKind::Precopy => "precopy",
            MethodKind::Migrror => "migrror",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodSelection {
    Both,
    Precopy,
    Migrror,
}

impl MethodSelection {
    pub fn kinds(self) -> &'static [MethodKind] {
        match self {
            MethodSelection::Both => &[MethodKind::Precopy, MethodKind::Migrror],
            MethodSelection::Precopy => &[MethodKind::Precopy],
            MethodSelection::Migrror => &[MethodKind::Migrror],
        }
    }
}

/// Method settings applied to every sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub rounds: u32,
    /// Pre-copy inter-round delay.
    pub inter_round_delay_s: f64,
    /// Gap between mirroring events for averaged containers.
    pub event_gap_s: f64,
    /// Mirroring hand-off; `None` aligns with pre-copy.
    pub policy: Option<HandoffPolicy>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            rounds: DEFAULT_ROUNDS,
            inter_round_delay_s: DEFAULT_INTER_ROUND_DELAY_S,
            event_gap_s: DEFAULT_EVENT_GAP_S,
            policy: None,
        }
    }
}

impl ExperimentConfig {
    pub fn migrror_policy(&self) -> HandoffPolicy {
        self.policy.unwrap_or(HandoffPolicy::AlignToPrecopy {
            rounds: self.rounds,
            inter_round_delay_s: self.inter_round_delay_s,
        })
    }

    pub fn method(&self, kind: MethodKind) -> Method {
        match kind {
            MethodKind::Precopy => Method::Precopy { rounds: self.rounds },
            MethodKind::Migrror => Method::Migrror { policy: self.migrror_policy() },
        }
    }
}

/// Copy of `base` set up for `kind`: the method is replaced and averaged
/// containers get the method's delay (pre-copy delay or mirroring gap).
pub fn configure_method(base: &FleetSpec, kind: MethodKind, config: &ExperimentConfig) -> FleetSpec {
    let delay = match kind {
        MethodKind::Precopy => config.inter_round_delay_s,
        MethodKind::Migrror => config.event_gap_s,
    };
    let mut spec = base.clone();
    spec.method = config.method(kind);
    for c in &mut spec.containers {
        if let ParamMode::Averaged(avg) = &mut c.params {
            avg.inter_round_delay_s = delay;
        }
    }
    spec
}

/// Parameter override applied to one container.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Override {
    Set(SweepParameter, f64),
    /// Sets the (mean) transfer rate and the hand-off rate, scaling dirtying
    /// rates with it so every λ is unchanged.
    RateHoldingLambda(f64),
}

fn map_events(trace: &mut RateTrace, f: impl Fn(usize, &[TraceEvent]) -> TraceEvent) {
    let old = trace.events.clone();
    trace.events = (0..old.len()).map(|i| f(i, &old)).collect();
}

pub fn override_container(container: &mut ContainerProfile, change: Override) {
    match change {
        Override::Set(SweepParameter::MemoryMb, v) => container.memory_mb = v,
        Override::Set(SweepParameter::TransferRateMbps, v) => {
            container.handoff_rate_mbps = v;
            match &mut container.params {
                ParamMode::Averaged(avg) => avg.avg_rate_mbps = v,
                ParamMode::Traced(trace) => map_events(trace, |i, e| TraceEvent { rate_mbps: v, ..e[i] }),
            }
        }
        Override::Set(SweepParameter::DirtyRateMbps, v) => match &mut container.params {
            ParamMode::Averaged(avg) => avg.avg_dirty_mbps = v,
            ParamMode::Traced(trace) => map_events(trace, |i, e| TraceEvent { dirty_mbps: v, ..e[i] }),
        },
        Override::Set(SweepParameter::Lambda, v) => match &mut container.params {
            ParamMode::Averaged(avg) => avg.avg_dirty_mbps = v * avg.avg_rate_mbps,
            // λ_{i+1} = d_i / r_{i+1}; the last event pairs with its own rate.
            ParamMode::Traced(trace) => map_events(trace, |i, e| {
                let next_rate = e.get(i + 1).unwrap_or(&e[i]).rate_mbps;
                TraceEvent { dirty_mbps: v * next_rate, ..e[i] }
            }),
        },
        Override::RateHoldingLambda(v) => {
            container.handoff_rate_mbps = v;
            match &mut container.params {
                ParamMode::Averaged(avg) => {
                    let lambda = avg.lambda();
                    avg.avg_rate_mbps = v;
                    avg.avg_dirty_mbps = lambda * v;
                }
                ParamMode::Traced(trace) => {
                    let factor = v / mean(&trace.rates());
                    map_events(trace, |i, e| TraceEvent {
                        rate_mbps: e[i].rate_mbps * factor,
                        dirty_mbps: e[i].dirty_mbps * factor,
                        gap_s: e[i].gap_s,
                    });
                }
            }
        }
    }
}

/// The fleet evaluated at one sweep point for one method.
pub fn sweep_point_spec(base: &FleetSpec, change: Override, kind: MethodKind, config: &ExperimentConfig) -> FleetSpec {
    let mut spec = configure_method(base, kind, config);
    for c in &mut spec.containers {
        override_container(c, change);
    }
    spec
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub method: MethodKind,
    pub status: RowStatus,
    pub downtime_s: Option<f64>,
    pub migration_time_s: Option<f64>,
    pub overhead_mb: Option<f64>,
    pub bandwidth_feasible: Option<bool>,
    pub error: Option<String>,
}

impl SweepRow {
    fn from_result(axis_value: f64, method: MethodKind, result: Result<FleetOutcome, FleetError>) -> Self {
        match result {
            Ok(out) => SweepRow {
                axis_value,
                method,
                status: RowStatus::Ok,
                downtime_s: Some(out.fleet_downtime_s),
                migration_time_s: Some(out.fleet_migration_time_s),
                overhead_mb: Some(out.fleet_overhead_mb),
                bandwidth_feasible: Some(out.is_feasible()),
                error: None,
            },
            Err(e) => SweepRow {
                axis_value,
                method,
                status: RowStatus::Failed,
                downtime_s: None,
                migration_time_s: None,
                overhead_mb: None,
                bandwidth_feasible: None,
                error: Some(e.to_string()),
            },
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == RowStatus::Ok
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub methods: MethodSelection,
    pub config: ExperimentConfig,
    pub total_bandwidth_mbps: f64,
    pub containers: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub metadata: SweepMetadata,
    pub rows: Vec<SweepRow>,
}

/// Ascending by axis value, then pre-copy before mirroring.
fn sort_rows(rows: &mut [SweepRow]) {
    rows.sort_by(|a, b| a.axis_value.total_cmp(&b.axis_value).then(a.method.name().cmp(b.method.name()).reverse()));
}

/// Runs every (axis value × method) point. Failing points are kept as failed
/// rows; the sweep itself only fails on an invalid axis or base fleet.
pub fn run_sweep(
    base: &FleetSpec,
    axis: &SweepAxis,
    methods: MethodSelection,
    config: &ExperimentConfig,
) -> Result<SweepResult, ExperimentError> {
    axis.check()?;
    if base.containers.is_empty() {
        return Err(FleetError::ZeroContainers.into());
    }
    let points: Vec<(f64, MethodKind)> = axis
        .values
        .iter()
        .flat_map(|&v| methods.kinds().iter().map(move |&k| (v, k)))
        .collect();
    let mut rows: Vec<SweepRow> = points
        .par_iter()
        .map(|&(value, kind)| {
            let spec = sweep_point_spec(base, Override::Set(axis.parameter, value), kind, config);
            SweepRow::from_result(value, kind, run_fleet(&spec))
        })
        .collect();
    sort_rows(&mut rows);
    Ok(SweepResult {
        metadata: SweepMetadata {
            parameter: axis.parameter,
            values: axis.values.clone(),
            methods,
            config: *config,
            total_bandwidth_mbps: base.total_bandwidth_mbps,
            containers: base.containers.len(),
            source: None,
            seed: None,
        },
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub method: MethodKind,
    pub axis_value: f64,
    pub migration_time_s: f64,
    pub downtime_s: f64,
}

/// Fleet (migration time, downtime) pairs along a transfer-rate axis with
/// every container's λ held fixed, ordered by migration time per method.
/// Points where a method fails are skipped.
pub fn downtime_vs_time_curve(
    base: &FleetSpec,
    rates: &[f64],
    methods: MethodSelection,
    config: &ExperimentConfig,
) -> Result<Vec<CurveRow>, ExperimentError> {
    SweepAxis::new(SweepParameter::TransferRateMbps, rates.to_vec())?;
    let mut rows = Vec::new();
    for &kind in methods.kinds() {
        let mut method_rows: Vec<CurveRow> = rates
            .par_iter()
            .filter_map(|&rate| {
                let spec = sweep_point_spec(base, Override::RateHoldingLambda(rate), kind, config);
                run_fleet(&spec).ok().map(|out| CurveRow {
                    method: kind,
                    axis_value: rate,
                    migration_time_s: out.fleet_migration_time_s,
                    downtime_s: out.fleet_downtime_s,
                })
            })
            .collect();
        method_rows.sort_by(|a, b| a.migration_time_s.total_cmp(&b.migration_time_s));
        rows.extend(method_rows);
    }
    Ok(rows)
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Downtime,
    MigrationTime,
    Overhead,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Downtime, Metric::MigrationTime, Metric::Overhead];

    pub fn of(self, outcome: &MigrationOutcome) -> f64 {
        match self {
            Metric::Downtime => outcome.downtime_s,
            Metric::MigrationTime => outcome.migration_time_s,
            Metric::Overhead => outcome.overhead_mb,
        }
    }

    pub fn of_fleet(self, outcome: &FleetOutcome) -> f64 {
        match self {
            Metric::Downtime => outcome.fleet_downtime_s,
            Metric::MigrationTime => outcome.fleet_migration_time_s,
            Metric::Overhead => outcome.fleet_overhead_mb,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    /// Container id, or `fleet` for the aggregate.
    pub id: String,
    pub metric: Metric,
    pub non_average: f64,
    pub average: f64,
    /// `non_average - average`.
    pub deviation: f64,
    /// Deviation relative to the averaged result, in percent; `None` when the
    /// averaged result is zero and the deviation is not.
    pub deviation_pct: Option<f64>,
}

impl CompareRow {
    fn new(id: &str, metric: Metric, non_average: f64, average: f64) -> Self {
        let deviation = non_average - average;
        let deviation_pct = if deviation == 0.0 {
            Some(0.0)
        } else if average == 0.0 {
            None
        } else {
            Some(deviation / average * 100.0)
        };
        Self { id: id.to_string(), metric, non_average, average, deviation, deviation_pct }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
    pub fleet: Vec<CompareRow>,
}

impl CompareReport {
    pub fn row(&self, id: &str, metric: Metric) -> Option<&CompareRow> {
        self.rows.iter().chain(&self.fleet).find(|r| r.id == id && r.metric == metric)
    }
}

/// Constant trace with the same event count and gaps as `trace`, at its mean
/// transfer and dirtying rates.
pub fn averaged_trace(trace: &RateTrace) -> RateTrace {
    let rate = mean(&trace.rates());
    let dirty = mean(&trace.dirty_rates());
    RateTrace::new(
        trace
            .events
            .iter()
            .map(|e| TraceEvent { rate_mbps: rate, dirty_mbps: dirty, gap_s: e.gap_s })
            .collect(),
    )
}

/// Runs mirroring on each container's trace and on its averaged counterpart
/// and reports the deviation of the trace-driven result. `policy` defaults
/// to the fleet's mirroring policy, or to all trace events.
pub fn compare_avg_vs_nonavg(spec: &FleetSpec, policy: Option<HandoffPolicy>) -> Result<CompareReport, ExperimentError> {
    if spec.containers.is_empty() {
        return Err(FleetError::ZeroContainers.into());
    }
    let fleet_policy = match spec.method {
        Method::Migrror { policy } => Some(policy),
        Method::Precopy { .. } => None,
    };
    let pairs = spec
        .containers
        .par_iter()
        .map(|c| {
            let trace = c.trace().ok_or_else(|| ExperimentError::NotTraced(c.id.clone()))?;
            let policy = policy
                .or(fleet_policy)
                .unwrap_or(HandoffPolicy::FixedSteps { count: trace.len() as u32 });
            let tag = |source| FleetError::Container { id: c.id.clone(), source };
            let raw = migrror_outcome(c, &policy).map_err(tag)?;
            let averaged = ContainerProfile { params: ParamMode::Traced(averaged_trace(trace)), ..c.clone() };
            let avg = migrror_outcome(&averaged, &policy).map_err(tag)?;
            Ok((raw, avg))
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;

    let mut rows = Vec::with_capacity(pairs.len() * 3);
    for (raw, avg) in &pairs {
        for metric in Metric::ALL {
            rows.push(CompareRow::new(&raw.container_id, metric, metric.of(raw), metric.of(avg)));
        }
    }
    let fleet_metric = |metric: Metric, pick: fn(&(MigrationOutcome, MigrationOutcome)) -> &MigrationOutcome| {
        let values = pairs.iter().map(|p| metric.of(pick(p)));
        match metric {
            Metric::Overhead => order_free_sum(values),
            _ => values.fold(f64::NEG_INFINITY, f64::max),
        }
    };
    let fleet = Metric::ALL
        .iter()
        .map(|&m| CompareRow::new("fleet", m, fleet_metric(m, |p| &p.0), fleet_metric(m, |p| &p.1)))
        .collect();
    Ok(CompareReport { rows, fleet })
}

/// `base` with its traced containers' memory sizes and traces regenerated
/// from `synth` for repeat `repeat`. Containers are matched by position.
pub fn regenerate_traces(base: &FleetSpec, synth: &SynthBlock, repeat: u64) -> Result<FleetSpec, ExperimentError> {
    let fresh = synth.generate(base.containers.len(), repeat)?;
    let mut spec = base.clone();
    for (c, (memory_mb, trace)) in spec.containers.iter_mut().zip(fresh) {
        if let ParamMode::Traced(t) = &mut c.params {
            *t = trace;
            c.memory_mb = memory_mb;
        }
    }
    Ok(spec)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let stats = crate::trace::trace_stats(values).expect("at least one repeat");
        Self { mean: stats.mean, std: stats.std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatSummary {
    pub repeats: u64,
    pub base_seed: u64,
    pub fleet_downtime_s: MeanStd,
    pub fleet_migration_time_s: MeanStd,
    pub fleet_overhead_mb: MeanStd,
    pub runs: Vec<FleetOutcome>,
}

/// Runs `repeats` fleets with traces regenerated per repeat and reports mean
/// and standard deviation of each fleet metric.
pub fn repeat_fleet(base: &FleetSpec, synth: &SynthBlock, repeats: u64) -> Result<RepeatSummary, ExperimentError> {
    if repeats == 0 {
        return Err(ExperimentError::InvalidSpec("repeat count must be at least 1".into()));
    }
    let runs = (0..repeats)
        .into_par_iter()
        .map(|r| Ok(run_fleet(&regenerate_traces(base, synth, r)?)?))
        .collect::<Result<Vec<FleetOutcome>, ExperimentError>>()?;
    let summarize = |m: Metric| MeanStd::of(&runs.iter().map(|o| m.of_fleet(o)).collect::<Vec<_>>());
    Ok(RepeatSummary {
        repeats,
        base_seed: synth.seed,
        fleet_downtime_s: summarize(Metric::Downtime),
        fleet_migration_time_s: summarize(Metric::MigrationTime),
        fleet_overhead_mb: summarize(Metric::Overhead),
        runs,
    })
}
