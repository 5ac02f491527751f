//! Report writers. Output is deterministic byte-for-byte given the outcomes:
//! rows are written in replica order and floats use Rust's shortest
//! round-trip formatting.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::bounds::BoundRow;
use crate::error::Result;

use super::RunSummary;
use super::bandit::ReplicaOutcome;

pub const REGRET_CSV_HEADER: &str = "replica,t,instant_regret,cumulative_regret";

pub fn write_bounds_csv(path: &Path, outcomes: &[ReplicaOutcome]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", BoundRow::CSV_HEADER)?;
    for outcome in outcomes {
        for row in &outcome.rows {
            writeln!(w, "{}", row.to_csv_line())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_regret_csv(path: &Path, outcomes: &[ReplicaOutcome]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{REGRET_CSV_HEADER}")?;
    for outcome in outcomes {
        for p in &outcome.regret {
            writeln!(
                w,
                "{},{},{},{}",
                outcome.replica, p.t, p.instant, p.cumulative
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_json(path: &Path, summary: &RunSummary) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let body = serde_json::to_string_pretty(summary)
        .map_err(|e| std::io::Error::other(format!("summary serialization failed: {e}")))?;
    writeln!(w, "{body}")?;
    w.flush()?;
    Ok(())
}

pub const SUITE_STATS_CSV_HEADER: &str = "suite,statistic,value,std_err,pass";

/// Flat per-check statistics across all executed suites.
pub fn write_suite_stats_csv(path: &Path, summary: &RunSummary) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{SUITE_STATS_CSV_HEADER}")?;
    for (suite, report) in &summary.suites {
        for (statistic, check) in &report.checks {
            let value = check.value.or(check.rate);
            writeln!(
                w,
                "{suite},{statistic},{},{},{}",
                value.map(|v| v.to_string()).unwrap_or_default(),
                check.std_err.map(|v| v.to_string()).unwrap_or_default(),
                check.pass,
            )?;
        }
    }
    w.flush()?;
    Ok(())
}
