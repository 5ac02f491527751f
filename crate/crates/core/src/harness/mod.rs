//! Reproducible experiment driver: parse a JSON config, run the requested
//! verification suites across replicas, and emit `bounds.csv`, `regret.csv`
//! and `summary.json`.
//!
//! Determinism contract: `(config, master_seed)` fixes every output byte.
//! Replicas draw from counter-derived substreams and are aggregated in
//! replica order, so thread count and scheduling never show in the results.

mod bandit;
mod report;
mod slope;
mod suites;

pub use bandit::{BanditTask, RegretPoint, ReplicaChecks, ReplicaOutcome, StrideRule, run_replica};
pub use report::{
    REGRET_CSV_HEADER, SUITE_STATS_CSV_HEADER, write_bounds_csv, write_regret_csv,
    write_suite_stats_csv, write_summary_json,
};
pub use slope::{estimate_regret_slope, median_cumulative_curve, median_curve_from_rows};

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::env::RewardLaw;
use crate::error::{Error, Result};

/// The five verification suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteKind {
    /// Policy replicas with per-round bound evaluation, regret tracking and
    /// the CSV reports.
    Bandit,
    /// Deterministic checks of the bound evaluators themselves.
    Bounds,
    /// Bernstein moment checks on the synthetic martingale families.
    Mgf,
    /// Simultaneous martingale-bound violation rate under adversarial
    /// posteriors.
    Theorem1,
    /// Randomized change-of-measure and exponential-sum checks.
    Lemmas,
}

impl fmt::Display for SuiteKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            SuiteKind::Bandit => "bandit",
            SuiteKind::Bounds => "bounds",
            SuiteKind::Mgf => "mgf",
            SuiteKind::Theorem1 => "theorem1",
            SuiteKind::Lemmas => "lemmas",
        };
        f.write_str(name)
    }
}

impl FromStr for SuiteKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bandit" => Ok(SuiteKind::Bandit),
            "bounds" => Ok(SuiteKind::Bounds),
            "mgf" => Ok(SuiteKind::Mgf),
            "theorem1" => Ok(SuiteKind::Theorem1),
            "lemmas" => Ok(SuiteKind::Lemmas),
            other => Err(Error::InvalidConfig(format!(
                "unknown suite '{other}' (expected bandit, bounds, mgf, theorem1 or lemmas)"
            ))),
        }
    }
}

/// Parameters of the moment-inequality suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MgfParams {
    pub c: f64,
    pub horizon: u64,
    pub replicas: u64,
    /// Tilts as fractions of the maximal admissible `1/C`; each must lie in
    /// `[0, 1]`. The exponential's heavy upper tail makes the sample mean
    /// noisy near the top of the range, which the reported standard error
    /// accounts for.
    pub lambda_fractions: Vec<f64>,
}

impl Default for MgfParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            horizon: 100,
            replicas: 100_000,
            lambda_fractions: vec![0.1, 0.25, 0.5, 0.75, 1.0],
        }
    }
}

/// Parameters of the simultaneous-bound suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Theorem1Params {
    pub delta: f64,
    pub c: f64,
    pub h_size: usize,
    pub horizon: u64,
    pub replicas: u64,
    pub v_bar_margin: f64,
}

impl Default for Theorem1Params {
    fn default() -> Self {
        Self {
            delta: 0.05,
            c: 1.0,
            h_size: 20,
            horizon: 1000,
            replicas: 2000,
            v_bar_margin: 1e-6,
        }
    }
}

/// Parameters of the randomized lemma suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LemmaParams {
    pub change_of_measure_trials: u64,
    pub expsum_trials: u64,
    pub h_max: usize,
    pub phi_bound: f64,
    pub n_max: usize,
    pub x_bound: f64,
}

impl Default for LemmaParams {
    fn default() -> Self {
        Self {
            change_of_measure_trials: 10_000,
            expsum_trials: 100_000,
            h_max: 50,
            phi_bound: 10.0,
            n_max: 8,
            x_bound: 50.0,
        }
    }
}

/// Full experiment description, deserialized from a single JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub k: usize,
    pub arm_means: Vec<f64>,
    pub reward_law: RewardLaw,
    pub delta: f64,
    pub horizon: u64,
    pub replicas: u32,
    pub master_seed: u64,
    pub suites: Vec<SuiteKind>,
    pub output_dir: PathBuf,
    /// `None`: every round below 256 plus powers of two. `Some(s)`: every
    /// `s`-th round. The final round is always reported.
    #[serde(default)]
    pub report_stride: Option<u64>,
    /// Pull arms cyclically instead of sampling during warmup. Variance
    /// reduction aid, off by default; the analyzed policy samples.
    #[serde(default)]
    pub warmup_round_robin: bool,
    /// Worker threads; `None` uses the available parallelism.
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub mgf: MgfParams,
    #[serde(default)]
    pub theorem1: Theorem1Params,
    #[serde(default)]
    pub lemmas: LemmaParams,
}

impl ExperimentConfig {
    /// Parse and validate a JSON document; parse failures carry the line and
    /// column of the offending token.
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if !(2..=10_000).contains(&self.k) {
            return fail(format!("k must lie in [2, 10000], got {}", self.k));
        }
        if self.arm_means.len() != self.k {
            return fail(format!(
                "arm_means has {} entries but k = {}",
                self.arm_means.len(),
                self.k
            ));
        }
        if self
            .arm_means
            .iter()
            .any(|m| !m.is_finite() || *m < 0.0 || *m > 1.0)
        {
            return fail("arm_means must lie in [0, 1]".into());
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return fail(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if !(1..=100_000_000).contains(&self.horizon) {
            return fail(format!("horizon must lie in [1, 1e8], got {}", self.horizon));
        }
        if self.horizon < self.k as u64 {
            return fail(format!(
                "horizon {} is shorter than the K = {} warmup",
                self.horizon, self.k
            ));
        }
        if self.replicas < 1 {
            return fail("replicas must be >= 1".into());
        }
        if self.suites.is_empty() {
            return fail("suites must name at least one suite".into());
        }
        let mut seen = self.suites.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.suites.len() {
            return fail("suites contains duplicates".into());
        }
        if self.report_stride == Some(0) {
            return fail("report_stride must be >= 1".into());
        }
        if self.threads == Some(0) {
            return fail("threads must be >= 1".into());
        }
        let m = &self.mgf;
        let mgf_ok =
            m.c > 0.0 && m.horizon >= 1 && m.replicas >= 2 && !m.lambda_fractions.is_empty();
        if !mgf_ok {
            return fail("mgf params need c > 0, horizon >= 1, replicas >= 2, tilts".into());
        }
        if m.lambda_fractions.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return fail("mgf lambda_fractions must lie in [0, 1]".into());
        }
        if m.lambda_fractions.len() > 256 {
            return fail("mgf lambda_fractions supports at most 256 grid points".into());
        }
        let t1 = &self.theorem1;
        let t1_ok = t1.delta > 0.0
            && t1.delta < 1.0
            && t1.c > 0.0
            && t1.h_size >= 1
            && t1.horizon >= 1
            && t1.replicas >= 1
            && t1.v_bar_margin >= 0.0;
        if !t1_ok {
            return fail("theorem1 params out of range".into());
        }
        let lm = &self.lemmas;
        let lm_ok = lm.change_of_measure_trials >= 1
            && lm.expsum_trials >= 1
            && lm.h_max >= 2
            && lm.n_max >= 2
            && lm.phi_bound > 0.0
            && lm.x_bound > 0.0;
        if !lm_ok {
            return fail("lemmas params out of range".into());
        }
        Ok(())
    }

    pub(crate) fn stride_rule(&self) -> StrideRule {
        match self.report_stride {
            None => StrideRule::Default,
            Some(s) => StrideRule::Every(s),
        }
    }
}

/// One named check inside a suite.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_err: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckReport {
    fn boolean(pass: bool) -> Self {
        Self { pass, rate: None, std_err: None, n: None, value: None, detail: None }
    }

    fn rate(rate: f64, std_err: f64, n: u64, pass: bool) -> Self {
        Self {
            pass,
            rate: Some(rate),
            std_err: Some(std_err),
            n: Some(n),
            value: None,
            detail: None,
        }
    }

    fn value(value: f64, pass: bool) -> Self {
        Self { pass, rate: None, std_err: None, n: None, value: Some(value), detail: None }
    }

    fn counted(value: f64, n: u64, pass: bool) -> Self {
        Self { pass, rate: None, std_err: None, n: Some(n), value: Some(value), detail: None }
    }

    fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

/// Pass/fail plus the named checks of one suite.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub pass: bool,
    pub checks: BTreeMap<String, CheckReport>,
}

impl SuiteReport {
    fn from_checks(checks: BTreeMap<String, CheckReport>) -> Self {
        let pass = checks.values().all(|c| c.pass);
        Self { pass, checks }
    }
}

/// Bandit-suite payload beyond the pass/fail checks.
#[derive(Debug, Clone, Serialize)]
pub struct BanditDetail {
    /// Closed-form part of the regret bound's round threshold.
    pub round_threshold_max_expression: u64,
    /// First round with both threshold components satisfied (within the
    /// horizon), i.e. where the regret bound certifies.
    pub certified_start: Option<u64>,
    /// Log-log slope of the median cumulative regret, when the horizon is
    /// long enough to estimate it.
    pub regret_slope: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope_window: Option<[u64; 2]>,
    /// Final cumulative regret of each replica, in replica order.
    pub final_cumulative_regret: Vec<f64>,
}

/// Everything a run produces besides the CSV files.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub version: String,
    pub master_seed: u64,
    pub pass: bool,
    pub suites: BTreeMap<String, SuiteReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandit: Option<BanditDetail>,
    pub config: ExperimentConfig,
}

/// Execute the configured suites and write all reports into
/// `config.output_dir`.
pub fn run(config: &ExperimentConfig) -> Result<RunSummary> {
    config.validate()?;
    std::fs::create_dir_all(&config.output_dir)?;
    match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::domain(format!("worker pool: {e}")))?
            .install(|| run_inner(config)),
        None => run_inner(config),
    }
}

fn run_inner(config: &ExperimentConfig) -> Result<RunSummary> {
    let mut suite_reports = BTreeMap::new();
    let mut bandit_detail = None;

    for suite in &config.suites {
        match suite {
            SuiteKind::Bandit => {
                let (report, detail, outcomes) = suites::run_bandit_suite(config)?;
                write_bounds_csv(&config.output_dir.join("bounds.csv"), &outcomes)?;
                write_regret_csv(&config.output_dir.join("regret.csv"), &outcomes)?;
                suite_reports.insert(suite.to_string(), report);
                bandit_detail = Some(detail);
            }
            SuiteKind::Bounds => {
                suite_reports.insert(suite.to_string(), suites::run_bounds_suite(config)?);
            }
            SuiteKind::Mgf => {
                suite_reports.insert(suite.to_string(), suites::run_mgf_suite(config)?);
            }
            SuiteKind::Theorem1 => {
                suite_reports.insert(suite.to_string(), suites::run_theorem1_suite(config)?);
            }
            SuiteKind::Lemmas => {
                suite_reports.insert(suite.to_string(), suites::run_lemmas_suite(config)?);
            }
        }
    }

    let pass = suite_reports.values().all(|s| s.pass);
    let summary = RunSummary {
        version: env!("CARGO_PKG_VERSION").to_string(),
        master_seed: config.master_seed,
        pass,
        suites: suite_reports,
        bandit: bandit_detail,
        config: config.clone(),
    };
    write_summary_json(&config.output_dir.join("summary.json"), &summary)?;
    write_suite_stats_csv(&config.output_dir.join("suite_stats.csv"), &summary)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config() -> ExperimentConfig {
        ExperimentConfig {
            k: 3,
            arm_means: vec![0.8, 0.5, 0.2],
            reward_law: RewardLaw::Bernoulli,
            delta: 0.2,
            horizon: 50,
            replicas: 2,
            master_seed: 7,
            suites: vec![SuiteKind::Bandit],
            output_dir: PathBuf::from("out"),
            report_stride: None,
            warmup_round_robin: false,
            threads: None,
            mgf: MgfParams::default(),
            theorem1: Theorem1Params::default(),
            lemmas: LemmaParams::default(),
        }
    }

    #[test]
    fn validation_catches_each_invariant() {
        assert!(base_config().validate().is_ok());

        let mut c = base_config();
        c.k = 1;
        assert!(c.validate().is_err());

        let mut c = base_config();
        c.arm_means = vec![0.5, 0.5];
        assert!(c.validate().is_err());

        let mut c = base_config();
        c.arm_means[0] = 1.5;
        assert!(c.validate().is_err());

        let mut c = base_config();
        c.delta = 1.0;
        assert!(c.validate().is_err());

        let mut c = base_config();
        c.horizon = 2; // shorter than warmup
        assert!(c.validate().is_err());

        let mut c = base_config();
        c.replicas = 0;
        assert!(c.validate().is_err());

        let mut c = base_config();
        c.suites = vec![];
        assert!(c.validate().is_err());

        let mut c = base_config();
        c.suites = vec![SuiteKind::Bandit, SuiteKind::Bandit];
        assert!(c.validate().is_err());

        let mut c = base_config();
        c.report_stride = Some(0);
        assert!(c.validate().is_err());

        let mut c = base_config();
        c.mgf.lambda_fractions = vec![1.5];
        assert!(c.validate().is_err());
    }

    #[test]
    fn json_errors_carry_position() {
        let err = ExperimentConfig::from_json("{\n  \"k\": \"three\"\n}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line"), "message lacks position: {msg}");
    }

    #[test]
    fn json_roundtrip_preserves_config() {
        let config = base_config();
        let text = serde_json::to_string(&config).unwrap();
        let back = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(config, back);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut v = serde_json::to_value(base_config()).unwrap();
        v.as_object_mut()
            .unwrap()
            .insert("horizonn".into(), serde_json::json!(10));
        let err = ExperimentConfig::from_json(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("horizonn"));
    }

    #[test]
    fn suite_names_roundtrip() {
        for kind in [
            SuiteKind::Bandit,
            SuiteKind::Bounds,
            SuiteKind::Mgf,
            SuiteKind::Theorem1,
            SuiteKind::Lemmas,
        ] {
            assert_eq!(kind.to_string().parse::<SuiteKind>().unwrap(), kind);
        }
        assert!("nope".parse::<SuiteKind>().is_err());
    }
}
