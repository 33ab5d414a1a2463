//! Seeded synthetic traces standing in for recorded datasets.

use rand::distr::{Distribution as _, Uniform};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal as StatNormal};

use super::stats::load;
use super::TraceError;
use crate::model::{RateTrace, TraceEvent};

/// Smallest acceptance probability tolerated by truncated-normal rejection.
const MIN_ACCEPTANCE: f64 = 1e-6;
const MAX_REDRAWS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    Uniform { min: f64, max: f64 },
    /// Normal restricted to `[min, max]`, located so that the restricted
    /// distribution has the requested mean. `std` is the scale of the
    /// underlying normal; the output std is only approximately matched.
    TruncatedNormal { mean: f64, std: f64, min: f64, max: f64 },
    Constant { value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ordering {
    Shuffled,
    Ascending,
    Descending,
    /// Largest `fraction` of values first.
    FrontLoaded { fraction: f64 },
    /// Largest `fraction` of values last.
    BackLoaded { fraction: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub length: usize,
    pub distribution: Distribution,
    pub ordering: Ordering,
    pub seed: u64,
}

impl SynthSpec {
    pub fn check(&self) -> Result<(), TraceError> {
        let bad = |msg: String| Err(TraceError::InvalidSpec(msg));
        if self.length == 0 {
            return bad("length must be at least 1".into());
        }
        match self.distribution {
            Distribution::Uniform { min, max } | Distribution::TruncatedNormal { min, max, .. }
                if !(min < max) || !min.is_finite() || !max.is_finite() =>
            {
                return bad(format!("bounds must satisfy min < max, got [{min}, {max}]"));
            }
            Distribution::TruncatedNormal { std, .. } if !(std > 0.0) || !std.is_finite() => {
                return bad(format!("std must be positive, got {std}"));
            }
            Distribution::TruncatedNormal { mean, min, max, .. } if !(mean > min && mean < max) => {
                return bad(format!("mean {mean} must lie strictly inside [{min}, {max}]"));
            }
            Distribution::Constant { value } if !value.is_finite() => {
                return bad(format!("constant must be finite, got {value}"));
            }
            _ => {}
        }
        match self.ordering {
            Ordering::FrontLoaded { fraction } | Ordering::BackLoaded { fraction }
                if !(fraction > 0.0 && fraction < 1.0) =>
            {
                bad(format!("fraction must be in (0, 1), got {fraction}"))
            }
            _ => Ok(()),
        }
    }

    /// Lower bound of any value this spec can produce.
    pub fn lower_bound(&self) -> f64 {
        match self.distribution {
            Distribution::Uniform { min, .. } | Distribution::TruncatedNormal { min, .. } => min,
            Distribution::Constant { value } => value,
        }
    }
}

/// Derives an independent seed for sub-stream `stream` of `base` (SplitMix64).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A sampler for one distribution, bound to its own seeded stream.
struct Sampler {
    rng: ChaCha8Rng,
    kind: SamplerKind,
}

enum SamplerKind {
    Uniform(Uniform<f64>),
    Truncated { normal: Normal<f64>, min: f64, max: f64 },
    Constant(f64),
}

impl Sampler {
    fn new(distribution: Distribution, seed: u64) -> Result<Self, TraceError> {
        let kind = match distribution {
            Distribution::Uniform { min, max } => SamplerKind::Uniform(
                Uniform::new_inclusive(min, max).map_err(|e| TraceError::InvalidSpec(e.to_string()))?,
            ),
            Distribution::TruncatedNormal { mean, std, min, max } => {
                let location = truncated_normal_location(mean, std, min, max)?;
                let normal = Normal::new(location, std).map_err(|e| TraceError::InvalidSpec(e.to_string()))?;
                SamplerKind::Truncated { normal, min, max }
            }
            Distribution::Constant { value } => SamplerKind::Constant(value),
        };
        Ok(Self { rng: ChaCha8Rng::seed_from_u64(seed), kind })
    }

    fn draw(&mut self) -> f64 {
        match &self.kind {
            SamplerKind::Uniform(u) => u.sample(&mut self.rng),
            SamplerKind::Truncated { normal, min, max } => loop {
                // Acceptance is at least MIN_ACCEPTANCE by construction.
                let x = normal.sample(&mut self.rng);
                if x >= *min && x <= *max {
                    break x;
                }
            },
            SamplerKind::Constant(v) => *v,
        }
    }
}

/// Probability mass of `[min, max]` and mean of the normal(location, std)
/// restricted to it.
fn truncated_moments(location: f64, std: f64, min: f64, max: f64) -> (f64, f64) {
    let unit = StatNormal::new(0.0, 1.0).expect("standard normal");
    let alpha = (min - location) / std;
    let beta = (max - location) / std;
    // Use the upper tail when both bounds sit above the location.
    let mass = if alpha > 0.0 { unit.sf(alpha) - unit.sf(beta) } else { unit.cdf(beta) - unit.cdf(alpha) };
    let mean = location + std * (unit.pdf(alpha) - unit.pdf(beta)) / mass;
    (mass, mean)
}

/// Location of the underlying normal whose restriction to `[min, max]` has
/// mean `target`, found by bisection (the restricted mean is increasing in
/// the location).
pub(crate) fn truncated_normal_location(target: f64, std: f64, min: f64, max: f64) -> Result<f64, TraceError> {
    let reach = 4.5 * std;
    let (mut lo, mut hi) = (min - reach, max + reach);
    let (lo_mass, lo_mean) = truncated_moments(lo, std, min, max);
    let (hi_mass, hi_mean) = truncated_moments(hi, std, min, max);
    if !(lo_mean <= target && target <= hi_mean) || lo_mass < MIN_ACCEPTANCE || hi_mass < MIN_ACCEPTANCE {
        return Err(TraceError::InvalidSpec(format!(
            "mean {target} is not reachable with std {std} on [{min}, {max}]"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if truncated_moments(mid, std, min, max).1 < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn apply_ordering(values: &mut Vec<f64>, ordering: Ordering, rng: &mut impl Rng) {
    match ordering {
        Ordering::Shuffled => values.shuffle(rng),
        Ordering::Ascending => values.sort_by(f64::total_cmp),
        Ordering::Descending => values.sort_by(|a, b| b.total_cmp(a)),
        Ordering::FrontLoaded { fraction } => *values = load(values, fraction, true),
        Ordering::BackLoaded { fraction } => *values = load(values, fraction, false),
    }
}

/// Samples `spec.length` values and then applies the requested ordering.
/// Deterministic in `spec`.
pub fn generate_trace(spec: &SynthSpec) -> Result<Vec<f64>, TraceError> {
    spec.check()?;
    let mut sampler = Sampler::new(spec.distribution, spec.seed)?;
    let mut values: Vec<f64> = (0..spec.length).map(|_| sampler.draw()).collect();
    let mut order_rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, 1));
    apply_ordering(&mut values, spec.ordering, &mut order_rng);
    Ok(values)
}

/// Generates a trace from three column specs of equal length, then redraws
/// any dirtying rate `d_i` that is not below the next transfer rate `r_{i+1}`
/// (so that every `λ_{i+1} < 1`). Redrawn positions may break the dirty
/// column's requested ordering.
pub fn generate_paired_trace(rate: &SynthSpec, dirty: &SynthSpec, gap: &SynthSpec) -> Result<RateTrace, TraceError> {
    if rate.length != dirty.length || rate.length != gap.length {
        return Err(TraceError::InvalidSpec("column specs must have the same length".into()));
    }
    let rates = generate_trace(rate)?;
    let mut dirties = generate_trace(dirty)?;
    let gaps = generate_trace(gap)?;
    if rate.lower_bound() <= 0.0 {
        return Err(TraceError::InvalidSpec("transfer rates must be positive".into()));
    }
    if dirty.lower_bound() < 0.0 || gap.lower_bound() < 0.0 {
        return Err(TraceError::InvalidSpec("dirtying rates and gaps must be non-negative".into()));
    }

    let mut redraw = Sampler::new(dirty.distribution, derive_seed(dirty.seed, 2))?;
    for i in 0..dirties.len().saturating_sub(1) {
        let cap = rates[i + 1];
        let mut tries = 0;
        while dirties[i] >= cap {
            if tries == MAX_REDRAWS {
                return Err(TraceError::InvalidSpec(format!(
                    "cannot draw a dirtying rate below transfer rate {cap} at event {}",
                    i + 1
                )));
            }
            dirties[i] = redraw.draw();
            tries += 1;
        }
    }

    let events = rates
        .into_iter()
        .zip(dirties)
        .zip(gaps)
        .map(|((rate_mbps, dirty_mbps), gap_s)| TraceEvent { rate_mbps, dirty_mbps, gap_s })
        .collect();
    Ok(RateTrace::new(events))
}
