//! Domain types shared by every engine.
//!
//! Canonical units: megabits for data, megabits/second for rates, seconds for
//! time. Container memory is the one quantity supplied in megabytes; it is
//! converted to megabits exactly once, in [`ContainerProfile::memory_megabits`].

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

pub const MEGABITS_PER_MEGABYTE: f64 = 8.0;

pub fn megabytes_to_megabits(megabytes: f64) -> f64 {
    megabytes * MEGABITS_PER_MEGABYTE
}

pub fn megabits_to_megabytes(megabits: f64) -> f64 {
    megabits / MEGABITS_PER_MEGABYTE
}

/// One migrating VM or container.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainerProfile {
    pub id: String,
    /// Memory footprint in megabytes.
    pub memory_mb: f64,
    /// Rate available during stop-and-copy, Mbps.
    pub handoff_rate_mbps: f64,
    pub params: ParamMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamMode {
    Averaged(AveragedParams),
    Traced(RateTrace),
}

/// Averaged transfer/dirtying rates, as used by the pre-copy model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragedParams {
    pub avg_rate_mbps: f64,
    pub avg_dirty_mbps: f64,
    /// Idle delay appended to every round (or event, when expanded into a trace).
    pub inter_round_delay_s: f64,
}

impl AveragedParams {
    /// Dirtying rate over transfer rate.
    pub fn lambda(&self) -> f64 {
        self.avg_dirty_mbps / self.avg_rate_mbps
    }

    /// The per-event sample this profile repeats when expanded into a trace.
    pub fn as_event(&self) -> TraceEvent {
        TraceEvent {
            rate_mbps: self.avg_rate_mbps,
            dirty_mbps: self.avg_dirty_mbps,
            gap_s: self.inter_round_delay_s,
        }
    }

    fn check(&self) -> Result<(), ModelError> {
        if !(self.avg_rate_mbps > 0.0) || !self.avg_rate_mbps.is_finite() {
            return Err(ModelError::NonPositiveRate { value: self.avg_rate_mbps });
        }
        if !(self.avg_dirty_mbps >= 0.0) || !self.avg_dirty_mbps.is_finite() {
            return Err(ModelError::NegativeDirtyRate { value: self.avg_dirty_mbps });
        }
        if !(self.inter_round_delay_s >= 0.0) || !self.inter_round_delay_s.is_finite() {
            return Err(ModelError::NegativeGap { value: self.inter_round_delay_s });
        }
        let lambda = self.lambda();
        if lambda >= 1.0 {
            // Averaged λ first applies at round 2.
            return Err(ModelError::LambdaNotLessThanOne { step: 2, lambda });
        }
        Ok(())
    }
}

/// Per-event samples of transfer rate, dirtying rate and trailing gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTrace {
    pub events: Vec<TraceEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub rate_mbps: f64,
    pub dirty_mbps: f64,
    /// Gap appended after this event's transfer completes.
    pub gap_s: f64,
}

impl RateTrace {
    pub fn new(events: Vec<TraceEvent>) -> Self {
        Self { events }
    }

    /// Builds a trace from parallel columns. Panics if the lengths differ.
    pub fn from_columns(rates: &[f64], dirty: &[f64], gaps: &[f64]) -> Self {
        assert!(
            rates.len() == dirty.len() && dirty.len() == gaps.len(),
            "trace columns must have equal length"
        );
        let events = rates
            .iter()
            .zip(dirty)
            .zip(gaps)
            .map(|((&rate_mbps, &dirty_mbps), &gap_s)| TraceEvent { rate_mbps, dirty_mbps, gap_s })
            .collect();
        Self { events }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn rates(&self) -> Vec<f64> {
        self.events.iter().map(|e| e.rate_mbps).collect()
    }

    pub fn dirty_rates(&self) -> Vec<f64> {
        self.events.iter().map(|e| e.dirty_mbps).collect()
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.events.iter().map(|e| e.gap_s).collect()
    }

    /// λ applied at `step` (1-based); 0 for step 1.
    pub fn lambda_at(&self, step: usize) -> f64 {
        if step <= 1 {
            0.0
        } else {
            self.events[step - 2].dirty_mbps / self.events[step - 1].rate_mbps
        }
    }

    fn check(&self) -> Result<(), ModelError> {
        if self.events.is_empty() {
            return Err(ModelError::EmptyTrace);
        }
        for (i, event) in self.events.iter().enumerate() {
            let step = i + 1;
            if !(event.rate_mbps > 0.0) || !event.rate_mbps.is_finite() {
                return Err(ModelError::NonPositiveRate { value: event.rate_mbps });
            }
            if !(event.dirty_mbps >= 0.0) || !event.dirty_mbps.is_finite() {
                return Err(ModelError::NegativeDirtyRate { value: event.dirty_mbps });
            }
            if !(event.gap_s >= 0.0) || !event.gap_s.is_finite() {
                return Err(ModelError::NegativeGap { value: event.gap_s });
            }
            if step >= 2 {
                let lambda = self.lambda_at(step);
                if lambda >= 1.0 {
                    return Err(ModelError::LambdaNotLessThanOne { step, lambda });
                }
            }
        }
        Ok(())
    }
}

impl ContainerProfile {
    pub fn averaged(
        id: impl Into<String>,
        memory_mb: f64,
        handoff_rate_mbps: f64,
        params: AveragedParams,
    ) -> Self {
        Self {
            id: id.into(),
            memory_mb,
            handoff_rate_mbps,
            params: ParamMode::Averaged(params),
        }
    }

    pub fn traced(
        id: impl Into<String>,
        memory_mb: f64,
        handoff_rate_mbps: f64,
        trace: RateTrace,
    ) -> Self {
        Self {
            id: id.into(),
            memory_mb,
            handoff_rate_mbps,
            params: ParamMode::Traced(trace),
        }
    }

    pub fn memory_megabits(&self) -> f64 {
        megabytes_to_megabits(self.memory_mb)
    }

    /// Checks every invariant without consuming the profile.
    pub fn check(&self) -> Result<(), ModelError> {
        if !(self.memory_mb > 0.0) || !self.memory_mb.is_finite() {
            return Err(ModelError::NonPositiveMemory { value: self.memory_mb });
        }
        if !(self.handoff_rate_mbps > 0.0) || !self.handoff_rate_mbps.is_finite() {
            return Err(ModelError::NonPositiveRate { value: self.handoff_rate_mbps });
        }
        match &self.params {
            ParamMode::Averaged(avg) => avg.check(),
            ParamMode::Traced(trace) => trace.check(),
        }
    }

    pub fn averaged_params(&self) -> Option<&AveragedParams> {
        match &self.params {
            ParamMode::Averaged(avg) => Some(avg),
            ParamMode::Traced(_) => None,
        }
    }

    pub fn trace(&self) -> Option<&RateTrace> {
        match &self.params {
            ParamMode::Traced(trace) => Some(trace),
            ParamMode::Averaged(_) => None,
        }
    }

    /// Mean transfer and dirtying rates. For a traced profile the delay is the
    /// supplied `delay_s`; an averaged profile keeps its own parameters except
    /// for the delay, which is also replaced.
    pub fn mean_params(&self, delay_s: f64) -> AveragedParams {
        match &self.params {
            ParamMode::Averaged(avg) => AveragedParams { inter_round_delay_s: delay_s, ..*avg },
            ParamMode::Traced(trace) => AveragedParams {
                avg_rate_mbps: crate::trace::mean(&trace.rates()),
                avg_dirty_mbps: crate::trace::mean(&trace.dirty_rates()),
                inter_round_delay_s: delay_s,
            },
        }
    }
}

/// Validates a profile, returning it unchanged when every invariant holds.
pub fn validate_profile(profile: ContainerProfile) -> Result<ContainerProfile, ModelError> {
    profile.check()?;
    Ok(profile)
}

/// When the migration hands off to the destination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HandoffPolicy {
    /// Exactly `count` events (or rounds).
    #[serde(rename = "fixed")]
    FixedSteps { count: u32 },
    /// Run events until the cumulative elapsed time reaches `budget_s`; the
    /// event during which the budget runs out is the last one.
    Deadline { budget_s: f64 },
    /// Deadline equal to the pre-handoff duration of a pre-copy migration of
    /// the same container with `rounds` rounds and the given inter-round delay.
    #[serde(rename = "align")]
    AlignToPrecopy { rounds: u32, inter_round_delay_s: f64 },
}

impl HandoffPolicy {
    pub fn check(&self) -> Result<(), ModelError> {
        match *self {
            HandoffPolicy::FixedSteps { count } if count == 0 => {
                Err(ModelError::InvalidPolicy("fixed step count must be at least 1".into()))
            }
            HandoffPolicy::Deadline { budget_s } if !(budget_s > 0.0) || !budget_s.is_finite() => {
                Err(ModelError::InvalidPolicy("deadline budget must be positive".into()))
            }
            HandoffPolicy::AlignToPrecopy { rounds, .. } if rounds == 0 => {
                Err(ModelError::InvalidPolicy("aligned round count must be at least 1".into()))
            }
            HandoffPolicy::AlignToPrecopy { inter_round_delay_s, .. }
                if !(inter_round_delay_s >= 0.0) || !inter_round_delay_s.is_finite() =>
            {
                Err(ModelError::InvalidPolicy("aligned inter-round delay must be non-negative".into()))
            }
            _ => Ok(()),
        }
    }
}

/// One round (pre-copy) or event (mirroring) of a migration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub index: usize,
    /// Megabits transferred in this step.
    pub volume_mb: f64,
    /// Transfer time plus trailing gap.
    pub duration_s: f64,
    pub lambda: f64,
    pub start_s: f64,
    pub end_s: f64,
    /// Rate in force during the transfer portion.
    pub rate_mbps: f64,
    pub gap_s: f64,
}

impl StepLog {
    /// End of the transfer portion; the gap that follows carries no traffic.
    pub fn transfer_end_s(&self) -> f64 {
        self.start_s + self.volume_mb / self.rate_mbps
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MigrationOutcome {
    pub container_id: String,
    pub downtime_s: f64,
    pub migration_time_s: f64,
    /// Total megabits sent, retransmissions included.
    pub overhead_mb: f64,
    /// Megabits sent during stop-and-copy.
    pub stop_volume_mb: f64,
    /// Rate used for the stop-and-copy transfer.
    pub stop_rate_mbps: f64,
    pub steps: Vec<StepLog>,
}

impl MigrationOutcome {
    /// Time at which stop-and-copy begins.
    pub fn handoff_s(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.end_s)
    }

    /// `[start, end)` spans during which this container is sending data, with
    /// the rate in force. The stop-and-copy transfer is the final span.
    pub fn transfer_intervals(&self) -> Vec<TransferInterval> {
        let mut out: Vec<TransferInterval> = self
            .steps
            .iter()
            .filter(|s| s.volume_mb > 0.0)
            .map(|s| TransferInterval {
                start_s: s.start_s,
                end_s: s.transfer_end_s(),
                rate_mbps: s.rate_mbps,
            })
            .collect();
        if self.stop_volume_mb > 0.0 {
            let start_s = self.handoff_s();
            out.push(TransferInterval {
                start_s,
                end_s: start_s + self.downtime_s,
                rate_mbps: self.stop_rate_mbps,
            });
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferInterval {
    pub start_s: f64,
    pub end_s: f64,
    pub rate_mbps: f64,
}
