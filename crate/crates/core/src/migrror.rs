//! Mirroring migration driven by per-event (non-average) samples.
//!
//! Event 1 ships the whole image at `r_1`. Every later event ships what was
//! dirtied during the previous event: `V_i = d_{i-1}·t_{i-1}`, and
//! `t_i = V_i/r_i + τ_i`, i.e. `t_i = λ_i·t_{i-1} + τ_i` with
//! `λ_i = d_{i-1}/r_i`. Hand-off happens after the last event selected by the
//! [`HandoffPolicy`]; stop-and-copy then ships `d_n·t_n` at the profile's
//! hand-off rate.

use crate::error::ModelError;
use crate::model::{AveragedParams, ContainerProfile, HandoffPolicy, MigrationOutcome, ParamMode, StepLog, TraceEvent};
use crate::precopy;

/// Upper bound on events generated from an averaged profile under a deadline.
/// A deadline that is not reached after this many events is reported as
/// [`ModelError::TraceTooShort`].
pub const MAX_EXPANDED_EVENTS: usize = 200_000;

/// When to stop the event recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    Steps(usize),
    Deadline(f64),
}

/// Runs the event recursion over `events`. Does not validate the events; use
/// the profile-level functions for that.
pub fn event_recursion<I>(memory_megabits: f64, events: I, stop: StopRule) -> Result<Vec<StepLog>, ModelError>
where
    I: IntoIterator<Item = TraceEvent>,
{
    let mut steps: Vec<StepLog> = Vec::new();
    let mut clock = 0.0;
    let mut previous: Option<(f64, f64)> = None; // (dirty rate, duration) of the previous event

    let satisfied = |steps: &[StepLog], clock: f64| match stop {
        StopRule::Steps(n) => steps.len() >= n,
        StopRule::Deadline(budget) => !steps.is_empty() && clock >= budget,
    };

    for event in events {
        if satisfied(&steps, clock) {
            break;
        }
        let index = steps.len() + 1;
        let (volume_mb, lambda) = match previous {
            None => (memory_megabits, 0.0),
            Some((dirty, duration)) => (dirty * duration, dirty / event.rate_mbps),
        };
        let duration_s = volume_mb / event.rate_mbps + event.gap_s;
        let start_s = clock;
        clock += duration_s;
        steps.push(StepLog {
            index,
            volume_mb,
            duration_s,
            lambda,
            start_s,
            end_s: clock,
            rate_mbps: event.rate_mbps,
            gap_s: event.gap_s,
        });
        previous = Some((event.dirty_mbps, duration_s));
    }

    if satisfied(&steps, clock) {
        Ok(steps)
    } else {
        Err(ModelError::TraceTooShort { available: steps.len() })
    }
}

/// Events for a profile: the trace itself, or an averaged profile repeated
/// as a constant trace.
fn events_of(profile: &ContainerProfile) -> Box<dyn Iterator<Item = TraceEvent> + '_> {
    match &profile.params {
        ParamMode::Traced(trace) => Box::new(trace.events.iter().copied()),
        ParamMode::Averaged(avg) => Box::new(std::iter::repeat(avg.as_event()).take(MAX_EXPANDED_EVENTS)),
    }
}

/// Pre-handoff duration of the pre-copy migration paired with `profile`.
/// The pairing uses the profile's mean rates and the supplied delay.
pub fn aligned_deadline(profile: &ContainerProfile, rounds: u32, inter_round_delay_s: f64) -> Result<f64, ModelError> {
    let paired = paired_precopy_profile(profile, inter_round_delay_s);
    let steps = precopy::precopy_rounds(&paired, rounds)?;
    Ok(steps.last().map_or(0.0, |s| s.end_s))
}

/// Averaged counterpart of `profile` used for hand-off alignment.
pub fn paired_precopy_profile(profile: &ContainerProfile, inter_round_delay_s: f64) -> ContainerProfile {
    let params: AveragedParams = profile.mean_params(inter_round_delay_s);
    ContainerProfile {
        params: ParamMode::Averaged(params),
        ..profile.clone()
    }
}

fn stop_rule(profile: &ContainerProfile, policy: &HandoffPolicy) -> Result<StopRule, ModelError> {
    policy.check()?;
    Ok(match *policy {
        HandoffPolicy::FixedSteps { count } => StopRule::Steps(count as usize),
        HandoffPolicy::Deadline { budget_s } => StopRule::Deadline(budget_s),
        HandoffPolicy::AlignToPrecopy { rounds, inter_round_delay_s } => {
            StopRule::Deadline(aligned_deadline(profile, rounds, inter_round_delay_s)?)
        }
    })
}

/// Per-event log up to hand-off.
pub fn migrror_events(profile: &ContainerProfile, policy: &HandoffPolicy) -> Result<Vec<StepLog>, ModelError> {
    profile.check()?;
    let stop = stop_rule(profile, policy)?;
    event_recursion(profile.memory_megabits(), events_of(profile), stop)
}

/// `λ_s·t_n` with `λ_s = d_n / r_s`.
pub fn migrror_downtime(profile: &ContainerProfile, policy: &HandoffPolicy) -> Result<f64, ModelError> {
    Ok(migrror_outcome(profile, policy)?.downtime_s)
}

pub fn migrror_migration_time(profile: &ContainerProfile, policy: &HandoffPolicy) -> Result<f64, ModelError> {
    Ok(migrror_outcome(profile, policy)?.migration_time_s)
}

pub fn migrror_overhead(profile: &ContainerProfile, policy: &HandoffPolicy) -> Result<f64, ModelError> {
    Ok(migrror_outcome(profile, policy)?.overhead_mb)
}

pub fn migrror_outcome(profile: &ContainerProfile, policy: &HandoffPolicy) -> Result<MigrationOutcome, ModelError> {
    let steps = migrror_events(profile, policy)?;
    let final_dirty = match &profile.params {
        ParamMode::Traced(trace) => trace.events[steps.len() - 1].dirty_mbps,
        ParamMode::Averaged(avg) => avg.avg_dirty_mbps,
    };
    Ok(precopy::finish(profile, steps, final_dirty, profile.handoff_rate_mbps))
}
