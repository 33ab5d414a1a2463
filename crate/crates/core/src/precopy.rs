//! Pre-copy migration with averaged parameters.
//!
//! Round 1 ships the whole memory image; every later round ships what was
//! dirtied during the previous round, so round times follow
//! `t_i = λ·t_{i-1} + τ` with `t_1 = M/r̄ + τ`. After `m` rounds the container
//! stops and the last dirty set is copied at `r̄`.
//!
//! The step-by-step recursion is authoritative. The closed forms below are
//! derived from it and checked against it in tests.

use crate::error::ModelError;
use crate::model::{AveragedParams, ContainerProfile, MigrationOutcome, StepLog};

/// Default number of pre-copy rounds before hand-off.
pub const DEFAULT_ROUNDS: u32 = 10;

fn averaged(profile: &ContainerProfile) -> Result<AveragedParams, ModelError> {
    profile.check()?;
    // Traced profiles are reduced to their means, keeping the mean gap as τ.
    Ok(match profile.trace() {
        None => *profile.averaged_params().expect("averaged mode"),
        Some(trace) => profile.mean_params(crate::trace::mean(&trace.gaps())),
    })
}

fn check_rounds(rounds: u32) -> Result<(), ModelError> {
    if rounds == 0 {
        Err(ModelError::ZeroRounds)
    } else {
        Ok(())
    }
}

/// Per-round log for `rounds` pre-copy rounds.
pub fn precopy_rounds(profile: &ContainerProfile, rounds: u32) -> Result<Vec<StepLog>, ModelError> {
    let params = averaged(profile)?;
    check_rounds(rounds)?;
    Ok(rounds_from(profile.memory_megabits(), &params, rounds))
}

fn rounds_from(memory_megabits: f64, params: &AveragedParams, rounds: u32) -> Vec<StepLog> {
    let rate = params.avg_rate_mbps;
    let dirty = params.avg_dirty_mbps;
    let tau = params.inter_round_delay_s;
    let lambda = params.lambda();

    let mut steps = Vec::with_capacity(rounds as usize);
    let mut clock = 0.0;
    let mut previous_duration = 0.0;
    for index in 1..=rounds as usize {
        let volume_mb = if index == 1 { memory_megabits } else { dirty * previous_duration };
        let duration_s = volume_mb / rate + tau;
        let start_s = clock;
        clock += duration_s;
        steps.push(StepLog {
            index,
            volume_mb,
            duration_s,
            lambda: if index == 1 { 0.0 } else { lambda },
            start_s,
            end_s: clock,
            rate_mbps: rate,
            gap_s: tau,
        });
        previous_duration = duration_s;
    }
    steps
}

/// Round `i` duration from the closed form `(M/r̄)·λ^{i-1} + τ(1-λ^i)/(1-λ)`.
pub fn precopy_round_time_closed_form(profile: &ContainerProfile, round: u32) -> Result<f64, ModelError> {
    let params = averaged(profile)?;
    check_rounds(round)?;
    let lambda = params.lambda();
    let full_copy = profile.memory_megabits() / params.avg_rate_mbps;
    let i = round as i32;
    Ok(full_copy * lambda.powi(i - 1) + params.inter_round_delay_s * geometric_sum(lambda, round))
}

/// `1 + λ + … + λ^{n-1}`, i.e. `(1-λ^n)/(1-λ)` for λ < 1.
fn geometric_sum(lambda: f64, n: u32) -> f64 {
    (1.0 - lambda.powi(n as i32)) / (1.0 - lambda)
}

/// Stop-and-copy downtime `λ·t_m`, evaluated as `d̄·t_m / r̄`.
pub fn precopy_downtime(profile: &ContainerProfile, rounds: u32) -> Result<f64, ModelError> {
    Ok(precopy_outcome(profile, rounds)?.downtime_s)
}

/// `Σ t_i + TD` from the recursion.
pub fn precopy_migration_time(profile: &ContainerProfile, rounds: u32) -> Result<f64, ModelError> {
    Ok(precopy_outcome(profile, rounds)?.migration_time_s)
}

/// Total megabits sent: the full image, every retransmitted dirty set, and
/// the stop-and-copy payload.
pub fn precopy_overhead(profile: &ContainerProfile, rounds: u32) -> Result<f64, ModelError> {
    Ok(precopy_outcome(profile, rounds)?.overhead_mb)
}

pub fn precopy_outcome(profile: &ContainerProfile, rounds: u32) -> Result<MigrationOutcome, ModelError> {
    let params = averaged(profile)?;
    check_rounds(rounds)?;
    let steps = rounds_from(profile.memory_megabits(), &params, rounds);
    Ok(finish(profile, steps, params.avg_dirty_mbps, params.avg_rate_mbps))
}

/// Adds stop-and-copy to a step log: the final step's dirtying rate times
/// its duration is shipped at `stop_rate`. Shared with the mirroring engine
/// so both models sum in the same order.
pub(crate) fn finish(
    profile: &ContainerProfile,
    steps: Vec<StepLog>,
    final_dirty_mbps: f64,
    stop_rate_mbps: f64,
) -> MigrationOutcome {
    let last = steps.last().expect("at least one step");
    let stop_volume_mb = final_dirty_mbps * last.duration_s;
    let downtime_s = stop_volume_mb / stop_rate_mbps;
    let transfer_time: f64 = steps.iter().map(|s| s.duration_s).sum();
    let transfer_volume: f64 = steps.iter().map(|s| s.volume_mb).sum();
    MigrationOutcome {
        container_id: profile.id.clone(),
        downtime_s,
        migration_time_s: transfer_time + downtime_s,
        overhead_mb: transfer_volume + stop_volume_mb,
        stop_volume_mb,
        stop_rate_mbps,
        steps,
    }
}

/// Which τ coefficient to use in the closed-form sum of round times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TauCoefficient {
    /// `m(1-λ) - λ(1-λ^m)`, consistent with the recursion.
    #[default]
    Corrected,
    /// `m(1-λ) - λ(1-λ^{m+1})`, as commonly printed. Disagrees with the
    /// recursion whenever τ > 0 and λ > 0; kept for comparison only.
    AsPrinted,
}

/// Closed-form evaluations of the pre-copy metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecopyClosedForm {
    pub rounds_time_s: f64,
    pub downtime_s: f64,
    pub migration_time_s: f64,
    pub overhead_mb: f64,
}

pub fn precopy_closed_form(
    profile: &ContainerProfile,
    rounds: u32,
    coefficient: TauCoefficient,
) -> Result<PrecopyClosedForm, ModelError> {
    let params = averaged(profile)?;
    check_rounds(rounds)?;
    let lambda = params.lambda();
    let tau = params.inter_round_delay_s;
    let memory = profile.memory_megabits();
    let full_copy = memory / params.avg_rate_mbps;
    let m = rounds as i32;
    let lambda_m = lambda.powi(m);

    let tail = match coefficient {
        TauCoefficient::Corrected => 1.0 - lambda_m,
        TauCoefficient::AsPrinted => 1.0 - lambda.powi(m + 1),
    };
    let one_minus = 1.0 - lambda;
    let rounds_time_s = full_copy * geometric_sum(lambda, rounds)
        + tau * (f64::from(rounds) * one_minus - lambda * tail) / (one_minus * one_minus);
    let downtime_s = full_copy * lambda_m + lambda * tau * geometric_sum(lambda, rounds);
    // Every megabit sent after round 1 was dirtied during some round, so the
    // retransmitted volume is d̄ times the total round time.
    let overhead_mb = memory + params.avg_dirty_mbps * rounds_time_s;
    Ok(PrecopyClosedForm {
        rounds_time_s,
        downtime_s,
        migration_time_s: rounds_time_s + downtime_s,
        overhead_mb,
    })
}

/// Overhead without inter-round delay: `8M·(1-λ^{m+1})/(1-λ)`.
pub fn precopy_overhead_no_delay_closed_form(profile: &ContainerProfile, rounds: u32) -> Result<f64, ModelError> {
    let params = averaged(profile)?;
    check_rounds(rounds)?;
    Ok(profile.memory_megabits() * geometric_sum(params.lambda(), rounds + 1))
}
