//! Step-by-step reference evaluator. Plain loops over rounds and events,
//! no closed forms and nothing shared with the library.

#![allow(dead_code)]

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub start: f64,
    pub volume: f64,
    pub rate: f64,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    pub steps: Vec<Step>,
    pub stop_volume: f64,
    pub stop_rate: f64,
    pub downtime: f64,
    pub migration_time: f64,
    pub overhead: f64,
}

impl Run {
    /// (start, end, rate) of every transfer, gaps excluded.
    pub fn transfers(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        let mut handoff = 0.0;
        for s in &self.steps {
            if s.volume > 0.0 {
                out.push((s.start, s.start + s.volume / s.rate, s.rate));
            }
            handoff = s.start + s.time;
        }
        if self.stop_volume > 0.0 {
            out.push((handoff, handoff + self.downtime, self.stop_rate));
        }
        out
    }
}

/// One migration step: (transfer rate, dirtying rate, trailing gap).
pub type Event = (f64, f64, f64);

fn finish(steps: Vec<Step>, stop_volume: f64, stop_rate: f64) -> Run {
    let downtime = stop_volume / stop_rate;
    let mut elapsed = 0.0;
    let mut sent = 0.0;
    for s in &steps {
        elapsed += s.time;
        sent += s.volume;
    }
    Run {
        steps,
        stop_volume,
        stop_rate,
        downtime,
        migration_time: elapsed + downtime,
        overhead: sent + stop_volume,
    }
}

/// Runs `events` from a full memory image until `done` says to stop.
/// Returns the steps and the dirtying rate of the last one, or `None` if the
/// events run out first.
fn replay(memory_mb: f64, events: &[Event], done: impl Fn(usize, f64) -> bool) -> Option<(Vec<Step>, f64)> {
    let mut volume = memory_mb * 8.0;
    let mut clock = 0.0;
    let mut steps = Vec::new();
    for &(rate, dirty, gap) in events {
        let time = volume / rate + gap;
        steps.push(Step { start: clock, volume, rate, time });
        clock += time;
        volume = dirty * time;
        if done(steps.len(), clock) {
            return Some((steps, dirty));
        }
    }
    None
}

/// Pre-copy with averaged parameters for `rounds` rounds; stop-and-copy runs
/// at the average rate.
pub fn precopy(memory_mb: f64, rate: f64, dirty: f64, tau: f64, rounds: usize) -> Run {
    let events = vec![(rate, dirty, tau); rounds];
    let (steps, d) = replay(memory_mb, &events, |n, _| n == rounds).expect("enough rounds");
    let last = steps.last().unwrap().time;
    finish(steps, d * last, rate)
}

/// Mirroring over the first `count` events.
pub fn mirror_steps(memory_mb: f64, events: &[Event], count: usize, stop_rate: f64) -> Option<Run> {
    let (steps, d) = replay(memory_mb, events, |n, _| n == count)?;
    let last = steps.last().unwrap().time;
    Some(finish(steps, d * last, stop_rate))
}

/// Mirroring until the clock reaches `deadline`; the event that reaches it
/// is the last one.
pub fn mirror_deadline(memory_mb: f64, events: &[Event], deadline: f64, stop_rate: f64) -> Option<Run> {
    let (steps, d) = replay(memory_mb, events, |_, clock| clock >= deadline)?;
    let last = steps.last().unwrap().time;
    Some(finish(steps, d * last, stop_rate))
}

/// Time pre-copy spends before stop-and-copy.
pub fn precopy_handoff(memory_mb: f64, rate: f64, dirty: f64, tau: f64, rounds: usize) -> f64 {
    let run = precopy(memory_mb, rate, dirty, tau, rounds);
    run.migration_time - run.downtime
}

pub fn average(xs: &[f64]) -> f64 {
    let mut total = 0.0;
    for x in xs {
        total += x;
    }
    total / xs.len() as f64
}

/// Fleet metrics: (max downtime, max migration time, total overhead).
pub fn fleet(runs: &[Run]) -> (f64, f64, f64) {
    let mut down = 0.0f64;
    let mut time = 0.0f64;
    let mut overhead = 0.0;
    for r in runs {
        down = down.max(r.downtime);
        time = time.max(r.migration_time);
        overhead += r.overhead;
    }
    (down, time, overhead)
}

/// Aggregate transfer rate at instant `t` over half-open intervals.
pub fn load_at(transfers: &[(f64, f64, f64)], t: f64) -> f64 {
    let mut total = 0.0;
    for &(start, end, rate) in transfers {
        if start <= t && t < end {
            total += rate;
        }
    }
    total
}

/// Midpoints of a 1 ms grid covering every transfer.
pub fn grid(transfers: &[(f64, f64, f64)]) -> Vec<f64> {
    let horizon = transfers.iter().map(|t| t.1).fold(0.0, f64::max);
    let n = (horizon / 1e-3).ceil() as usize;
    (0..n).map(|k| (k as f64 + 0.5) * 1e-3).collect()
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}
