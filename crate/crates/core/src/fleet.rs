//! Simultaneous migration of several containers over a shared link.
//!
//! Every container starts at t = 0. Fleet downtime and migration time are
//! the per-container maxima; overhead is the sum. The shared-bandwidth
//! constraint is checked on the real timeline: at every instant the rates of
//! all containers currently transferring must not exceed `B`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ModelError;
use crate::model::{ContainerProfile, HandoffPolicy, MigrationOutcome, ParamMode, TransferInterval};
use crate::{migrror, precopy};

/// Relative slack allowed when comparing an aggregate rate with `B`, so that
/// `p` shares of `B/p` never count as a violation because of rounding.
pub const BANDWIDTH_RELATIVE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FleetError {
    #[error("fleet has no containers")]
    ZeroContainers,
    #[error("total bandwidth must be positive, got {0}")]
    NonPositiveBandwidth(f64),
    #[error("container {id}: {source}")]
    Container {
        id: String,
        #[source]
        source: ModelError,
    },
    #[error("invalid method: {0}")]
    InvalidMethod(#[source] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Precopy { rounds: u32 },
    Migrror { policy: HandoffPolicy },
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Precopy { .. } => "precopy",
            Method::Migrror { .. } => "migrror",
        }
    }

    fn check(&self) -> Result<(), FleetError> {
        match self {
            Method::Precopy { rounds: 0 } => Err(FleetError::InvalidMethod(ModelError::ZeroRounds)),
            Method::Precopy { .. } => Ok(()),
            Method::Migrror { policy } => policy.check().map_err(FleetError::InvalidMethod),
        }
    }

    pub fn outcome(&self, profile: &ContainerProfile) -> Result<MigrationOutcome, ModelError> {
        match self {
            Method::Precopy { rounds } => precopy::precopy_outcome(profile, *rounds),
            Method::Migrror { policy } => migrror::migrror_outcome(profile, policy),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FleetSpec {
    pub containers: Vec<ContainerProfile>,
    pub total_bandwidth_mbps: f64,
    pub method: Method,
}

impl FleetSpec {
    pub fn check(&self) -> Result<(), FleetError> {
        if self.containers.is_empty() {
            return Err(FleetError::ZeroContainers);
        }
        if !(self.total_bandwidth_mbps > 0.0) || !self.total_bandwidth_mbps.is_finite() {
            return Err(FleetError::NonPositiveBandwidth(self.total_bandwidth_mbps));
        }
        self.method.check()?;
        for c in &self.containers {
            c.check().map_err(|source| FleetError::Container { id: c.id.clone(), source })?;
        }
        Ok(())
    }

    /// Gives every container `B/p`: averaged containers get it as their
    /// transfer rate and hand-off rate, traced containers as hand-off rate.
    pub fn apply_equal_split(&mut self) -> Result<f64, FleetError> {
        let share = allocate_equal(self.total_bandwidth_mbps, self.containers.len())?;
        for c in &mut self.containers {
            c.handoff_rate_mbps = share;
            if let ParamMode::Averaged(avg) = &mut c.params {
                avg.avg_rate_mbps = share;
            }
        }
        Ok(share)
    }
}

/// `B / p`.
pub fn allocate_equal(total_bandwidth_mbps: f64, count: usize) -> Result<f64, FleetError> {
    if count == 0 {
        return Err(FleetError::ZeroContainers);
    }
    if !(total_bandwidth_mbps > 0.0) || !total_bandwidth_mbps.is_finite() {
        return Err(FleetError::NonPositiveBandwidth(total_bandwidth_mbps));
    }
    Ok(total_bandwidth_mbps / count as f64)
}

/// A span during which the aggregate transfer rate exceeded `B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthViolation {
    pub start_s: f64,
    pub end_s: f64,
    pub aggregate_rate_mbps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetOutcome {
    pub per_container: Vec<MigrationOutcome>,
    pub fleet_downtime_s: f64,
    pub fleet_migration_time_s: f64,
    pub fleet_overhead_mb: f64,
    pub bandwidth_report: Vec<BandwidthViolation>,
}

impl FleetOutcome {
    pub fn is_feasible(&self) -> bool {
        self.bandwidth_report.is_empty()
    }
}

fn max_of(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(f64::NEG_INFINITY, f64::max)
}

/// Sum in ascending order so the result does not depend on container order.
pub fn order_free_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.into_iter().sum()
}

/// Aggregates already-computed per-container outcomes.
pub fn aggregate(per_container: Vec<MigrationOutcome>, total_bandwidth_mbps: f64) -> FleetOutcome {
    let bandwidth_report = validate_bandwidth_timeline(&per_container, total_bandwidth_mbps);
    FleetOutcome {
        fleet_downtime_s: max_of(per_container.iter().map(|o| o.downtime_s)),
        fleet_migration_time_s: max_of(per_container.iter().map(|o| o.migration_time_s)),
        fleet_overhead_mb: order_free_sum(per_container.iter().map(|o| o.overhead_mb)),
        bandwidth_report,
        per_container,
    }
}

pub fn run_fleet(spec: &FleetSpec) -> Result<FleetOutcome, FleetError> {
    spec.check()?;
    let per_container = spec
        .containers
        .par_iter()
        .map(|c| {
            spec.method
                .outcome(c)
                .map_err(|source| FleetError::Container { id: c.id.clone(), source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(aggregate(per_container, spec.total_bandwidth_mbps))
}

/// Sweep-line check of the shared-bandwidth constraint over every
/// container's transfer spans. Gaps carry no traffic. Adjacent violating
/// spans with the same aggregate rate are merged.
pub fn validate_bandwidth_timeline(outcomes: &[MigrationOutcome], total_bandwidth_mbps: f64) -> Vec<BandwidthViolation> {
    let intervals: Vec<TransferInterval> = outcomes.iter().flat_map(|o| o.transfer_intervals()).collect();
    find_violations(&intervals, total_bandwidth_mbps)
}

pub fn exceeds(aggregate_rate_mbps: f64, total_bandwidth_mbps: f64) -> bool {
    aggregate_rate_mbps > total_bandwidth_mbps * (1.0 + BANDWIDTH_RELATIVE_SLACK)
}

pub fn find_violations(intervals: &[TransferInterval], total_bandwidth_mbps: f64) -> Vec<BandwidthViolation> {
    // (time, +rate at start / -rate at end); ends sort before starts at equal
    // times because spans are half-open.
    let mut boundaries: Vec<(f64, bool, f64)> = Vec::with_capacity(intervals.len() * 2);
    for iv in intervals.iter().filter(|iv| iv.end_s > iv.start_s && iv.rate_mbps > 0.0) {
        boundaries.push((iv.start_s, true, iv.rate_mbps));
        boundaries.push((iv.end_s, false, iv.rate_mbps));
    }
    boundaries.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut violations: Vec<BandwidthViolation> = Vec::new();
    // Track the active rates as a multiset so that removing a span restores the
    // exact aggregate instead of accumulating rounding drift.
    let mut active: Vec<f64> = Vec::new();
    let mut i = 0;
    while i < boundaries.len() {
        let now = boundaries[i].0;
        while i < boundaries.len() && boundaries[i].0 == now {
            let (_, is_start, rate) = boundaries[i];
            if is_start {
                active.push(rate);
            } else if let Some(pos) = active.iter().position(|&r| r == rate) {
                active.swap_remove(pos);
            }
            i += 1;
        }
        let Some(&(next, _, _)) = boundaries.get(i) else { break };
        let aggregate = order_free_sum(active.iter().copied());
        if !exceeds(aggregate, total_bandwidth_mbps) {
            continue;
        }
        match violations.last_mut() {
            Some(last) if last.end_s == now && last.aggregate_rate_mbps == aggregate => last.end_s = next,
            _ => violations.push(BandwidthViolation { start_s: now, end_s: next, aggregate_rate_mbps: aggregate }),
        }
    }
    violations
}
