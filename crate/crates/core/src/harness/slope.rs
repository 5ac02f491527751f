//! Log-log slope estimation for cumulative regret curves.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::stats::median;

use super::bandit::ReplicaOutcome;

/// Least-squares slope of `ln(regret)` against `ln(t)` over `[t_min, t_max]`.
///
/// Points with nonpositive regret are skipped; fewer than 10 usable points is
/// an error, as is a window narrower than one decade.
pub fn estimate_regret_slope(series: &[(u64, f64)], t_min: u64, t_max: u64) -> Result<f64> {
    if t_min == 0 || t_max < 10 * t_min {
        return Err(Error::domain(format!(
            "slope window [{t_min}, {t_max}] must span at least a decade"
        )));
    }
    let points: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, r)| *t >= t_min && *t <= t_max && *r > 0.0)
        .map(|(t, r)| ((*t as f64).ln(), r.ln()))
        .collect();
    if points.len() < 10 {
        return Err(Error::domain(format!(
            "only {} usable points in [{t_min}, {t_max}]; need at least 10",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|(x, _)| x).sum::<f64>() / n;
    let mean_y = points.iter().map(|(_, y)| y).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in &points {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if sxx == 0.0 {
        return Err(Error::domain("degenerate slope window: all abscissas equal"));
    }
    Ok(sxy / sxx)
}

/// Median-across-replicas cumulative regret at every shared stride round.
pub fn median_cumulative_curve(outcomes: &[ReplicaOutcome]) -> Vec<(u64, f64)> {
    let mut by_round: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for outcome in outcomes {
        for p in &outcome.regret {
            by_round.entry(p.t).or_default().push(p.cumulative);
        }
    }
    by_round
        .into_iter()
        .map(|(t, values)| (t, median(&values)))
        .collect()
}

/// Median curve from raw `(replica, t, cumulative)` rows, as read back from
/// `regret.csv`.
pub fn median_curve_from_rows(rows: &[(u32, u64, f64)]) -> Vec<(u64, f64)> {
    let mut by_round: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for (_, t, cum) in rows {
        by_round.entry(*t).or_default().push(*cum);
    }
    by_round
        .into_iter()
        .map(|(t, values)| (t, median(&values)))
        .collect()
}
