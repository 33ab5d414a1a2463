//! Parsers for the compact flag syntaxes.

use migsim_core::trace::{Distribution, Ordering};
use migsim_core::HandoffPolicy;

fn num(s: &str) -> Result<f64, String> {
    s.trim().parse::<f64>().map_err(|_| format!("`{s}` is not a number"))
}

fn fields<'a>(s: &'a str, name: &str, expected: usize) -> Result<Vec<&'a str>, String> {
    let parts: Vec<&str> = s.split(':').skip(1).collect();
    if parts.len() != expected {
        return Err(format!("`{s}`: {name} takes {expected} value(s)"));
    }
    Ok(parts)
}

/// `fixed:N`, `deadline:SECONDS`, `align:M` or `align:M:TAU`.
pub fn policy(s: &str, default_tau: f64) -> Result<HandoffPolicy, String> {
    let head = s.split(':').next().unwrap_or_default();
    let count = |v: &str| v.trim().parse::<u32>().map_err(|_| format!("`{v}` is not a count"));
    let policy = match head {
        "fixed" => HandoffPolicy::FixedSteps { count: count(fields(s, head, 1)?[0])? },
        "deadline" => HandoffPolicy::Deadline { budget_s: num(fields(s, head, 1)?[0])? },
        "align" => {
            let parts: Vec<&str> = s.split(':').skip(1).collect();
            match parts.as_slice() {
                [m] => HandoffPolicy::AlignToPrecopy { rounds: count(m)?, inter_round_delay_s: default_tau },
                [m, tau] => HandoffPolicy::AlignToPrecopy { rounds: count(m)?, inter_round_delay_s: num(tau)? },
                _ => return Err(format!("`{s}`: align takes M or M:TAU")),
            }
        }
        _ => return Err(format!("unknown policy `{s}`; expected fixed:N, deadline:SECONDS or align:M")),
    };
    policy.check().map_err(|e| e.to_string())?;
    Ok(policy)
}

/// `uniform:MIN:MAX`, `tnorm:MEAN:STD:MIN:MAX` or `const:VALUE`.
pub fn distribution(s: &str) -> Result<Distribution, String> {
    let head = s.split(':').next().unwrap_or_default();
    Ok(match head {
        "uniform" => {
            let f = fields(s, head, 2)?;
            Distribution::Uniform { min: num(f[0])?, max: num(f[1])? }
        }
        "tnorm" => {
            let f = fields(s, head, 4)?;
            Distribution::TruncatedNormal { mean: num(f[0])?, std: num(f[1])?, min: num(f[2])?, max: num(f[3])? }
        }
        "const" => Distribution::Constant { value: num(fields(s, head, 1)?[0])? },
        _ => return Err(format!("unknown distribution `{s}`; expected uniform:, tnorm: or const:")),
    })
}

/// `shuffled`, `ascending`, `descending`, `front:F` or `back:F`.
pub fn ordering(s: &str) -> Result<Ordering, String> {
    let head = s.split(':').next().unwrap_or_default();
    Ok(match head {
        "shuffled" => Ordering::Shuffled,
        "ascending" => Ordering::Ascending,
        "descending" => Ordering::Descending,
        "front" => Ordering::FrontLoaded { fraction: num(fields(s, head, 1)?[0])? },
        "back" => Ordering::BackLoaded { fraction: num(fields(s, head, 1)?[0])? },
        _ => return Err(format!("unknown ordering `{s}`")),
    })
}

/// Comma-separated list of numbers.
pub fn values(s: &str) -> Result<Vec<f64>, String> {
    if s.trim().is_empty() {
        return Ok(vec![]);
    }
    s.split(',').map(num).collect()
}

/// `START:STOP:STEPS`.
pub fn range(s: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [a, b, n] => Ok((num(a)?, num(b)?, n.trim().parse().map_err(|_| format!("`{n}` is not a step count"))?)),
        _ => Err(format!("`{s}`: expected START:STOP:STEPS")),
    }
}
