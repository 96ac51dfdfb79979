//! ε schedules such as `0.2:0.01:geometric` or `0.2:0.01:geometric:n9`.

use crate::error::{arg, Result};

/// Default point count: two points per halving, endpoints included.
pub fn default_count(start: f64, end: f64) -> usize {
    ((start / end).log2().ceil() as usize) * 2 + 1
}

/// Geometric sequence from `start` down to `end`, both included.
pub fn geometric(start: f64, end: f64, count: Option<usize>) -> Result<Vec<f64>> {
    if !(start > end && end > 0.0 && start.is_finite()) {
        return arg(format!("geometric schedule needs start > end > 0, got {start}:{end}"));
    }
    let n = count.unwrap_or_else(|| default_count(start, end));
    if n < 2 {
        return arg("schedule needs at least 2 points");
    }
    let ratio = (end / start).ln() / (n - 1) as f64;
    let mut out: Vec<f64> = (0..n).map(|i| start * (ratio * i as f64).exp()).collect();
    out[n - 1] = end;
    Ok(out)
}

/// Geometric sequence of integers from `start` down to `end`, deduplicated.
pub fn integer_geometric(start: usize, end: usize, count: usize) -> Vec<usize> {
    if start <= end || count < 2 {
        return vec![start.max(end)];
    }
    let mut out: Vec<usize> = geometric(start as f64, end as f64, Some(count))
        .unwrap()
        .into_iter()
        .map(|x| x.round() as usize)
        .collect();
    out.dedup();
    out
}

/// Parses `start:end:geometric[:nK]` or a comma-separated explicit list.
pub fn parse(s: &str) -> Result<Vec<f64>> {
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| crate::Error::Argument(format!("bad number '{x}' in schedule")));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 1 {
        let vals = s.split(',').map(num).collect::<Result<Vec<f64>>>()?;
        if vals.is_empty() {
            return arg("empty schedule");
        }
        return Ok(vals);
    }
    if parts.len() < 3 || parts.len() > 4 || parts[2] != "geometric" {
        return arg(format!("schedule '{s}' is not start:end:geometric[:nK]"));
    }
    let count = match parts.get(3) {
        Some(p) => Some(
            p.strip_prefix('n')
                .and_then(|k| k.parse::<usize>().ok())
                .ok_or_else(|| crate::Error::Argument(format!("bad count '{p}' in schedule")))?,
        ),
        None => None,
    };
    geometric(num(parts[0])?, num(parts[1])?, count)
}
