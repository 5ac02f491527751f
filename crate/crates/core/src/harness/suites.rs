//! Suite implementations behind [`super::run`].

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;

use crate::bounds::{self, BoundInputs};
use crate::env::BanditEnvironment;
use crate::error::Result;
use crate::martingale::{
    MartingaleFamily, PosteriorRule, Theorem1Config, bernstein_mgf_check, change_of_measure_check,
    theorem1_violation_rates,
};
use crate::policy::epsilon_value;
use crate::rng::{StreamDomain, substream};
use crate::simplex::SimplexDistribution;
use crate::stats::binomial_std_err;

use super::bandit::{BanditTask, ReplicaOutcome, run_replica};
use super::slope::{estimate_regret_slope, median_cumulative_curve};
use super::{BanditDetail, CheckReport, ExperimentConfig, SuiteReport};

/// The bandit suite: policy replicas, per-round bound evaluation, regret.
pub(super) fn run_bandit_suite(
    config: &ExperimentConfig,
) -> Result<(SuiteReport, BanditDetail, Vec<ReplicaOutcome>)> {
    let env = BanditEnvironment::new(config.arm_means.clone(), config.reward_law)?;
    let threshold = bounds::round_threshold(config.k, config.delta, config.horizon)?;
    let task = BanditTask {
        env,
        delta: config.delta,
        horizon: config.horizon,
        master_seed: config.master_seed,
        stride: config.stride_rule(),
        warmup_round_robin: config.warmup_round_robin,
        threshold,
    };
    let outcomes: Vec<ReplicaOutcome> = (0..config.replicas)
        .into_par_iter()
        .map(|replica| run_replica(&task, replica))
        .collect::<Result<Vec<_>>>()?;

    let n = config.replicas as u64;
    let rate_of = |count: u64| count as f64 / n as f64;
    let mut checks = BTreeMap::new();

    let thm2_exp = outcomes.iter().filter(|o| o.checks.thm2_posterior_violation).count() as u64;
    let thm2_worst = outcomes
        .iter()
        .filter(|o| o.checks.thm2_worst_arm_violation)
        .count() as u64;
    let thm3 = outcomes.iter().filter(|o| o.checks.thm3_violation).count() as u64;
    for (name, count) in [
        ("thm2_violation_rate_posterior", thm2_exp),
        ("thm2_violation_rate_worst_arm", thm2_worst),
        ("thm3_violation_rate", thm3),
    ] {
        let rate = rate_of(count);
        checks.insert(
            name.to_string(),
            CheckReport::rate(rate, binomial_std_err(rate, n), n, rate <= config.delta),
        );
    }

    let lemma1: u64 = outcomes.iter().map(|o| o.checks.lemma1_violations).sum();
    let lemma5: u64 = outcomes.iter().map(|o| o.checks.lemma5_violations).sum();
    let decomp: u64 = outcomes.iter().map(|o| o.checks.regret_decomp_violations).sum();
    let floor: u64 = outcomes.iter().map(|o| o.checks.floor_violations).sum();
    for (name, count) in [
        ("lemma1_deterministic", lemma1),
        ("lemma5_deterministic", lemma5),
        ("regret_decomposition_deterministic", decomp),
        ("epsilon_floor", floor),
    ] {
        checks.insert(
            name.to_string(),
            CheckReport::counted(count as f64, n * config.horizon, count == 0)
                .with_detail("violation count over all replicas and rounds"),
        );
    }

    // Slope of the median cumulative regret, when the horizon supports it.
    let t_min = threshold.max_expression.max(100);
    let slope_eligible = config.horizon >= 100 * threshold.max_expression
        && config.horizon >= 10 * t_min
        && config.replicas >= 1;
    let mut regret_slope = None;
    let mut slope_window = None;
    if slope_eligible {
        let curve = median_cumulative_curve(&outcomes);
        let slope = estimate_regret_slope(&curve, t_min, config.horizon)?;
        checks.insert(
            "regret_slope".to_string(),
            CheckReport::value(slope, (0.55..=0.90).contains(&slope))
                .with_detail("log-log slope of median cumulative regret"),
        );
        regret_slope = Some(slope);
        slope_window = Some([t_min, config.horizon]);
    }

    let detail = BanditDetail {
        round_threshold_max_expression: threshold.max_expression,
        certified_start: threshold.certified_start(),
        regret_slope,
        slope_window,
        final_cumulative_regret: outcomes.iter().map(|o| o.final_cumulative_regret).collect(),
    };
    Ok((SuiteReport::from_checks(checks), detail, outcomes))
}

/// Deterministic checks of the bound evaluators.
pub(super) fn run_bounds_suite(config: &ExperimentConfig) -> Result<SuiteReport> {
    let mut checks = BTreeMap::new();

    // Dividing the martingale bound by t under the ledger-cap substitution
    // reproduces the gap bound.
    let mut rng = substream(config.master_seed, StreamDomain::BoundsChecks, 0, 0);
    let mut max_rel = 0.0f64;
    let tuples = 1000;
    for _ in 0..tuples {
        let t = rng.random_range(1..=1_000_000u64);
        let delta = rng.random_range(0.01..0.5);
        let kl = rng.random_range(0.0..30.0);
        let eps = rng.random_range(1e-4..0.5);
        let v_bar = bounds::variance_upper_bound(t, eps);
        let inputs = BoundInputs::new(t, delta, 2.0 / eps, v_bar)?;
        let lhs = bounds::pac_bayes_bernstein_rhs(kl, v_bar, &inputs) / t as f64;
        let rhs = bounds::gap_bound_rhs(kl, t, eps, inputs.l)?.value;
        max_rel = max_rel.max((lhs - rhs).abs() / rhs);
    }
    checks.insert(
        "gap_bound_self_consistency".to_string(),
        CheckReport::counted(max_rel, tuples, max_rel <= 1e-12)
            .with_detail("max relative gap between the two bound routes"),
    );

    // Monotonicity of the martingale bound in kl, v_rho and L on a 10^3 grid
    // restricted to kl <= min(L) (the operating regime).
    let kls: Vec<f64> = (0..10).map(|i| 0.5 * i as f64).collect();
    let vs: Vec<f64> = (0..10).map(|i| 2.0 * i as f64).collect();
    let ls: Vec<f64> = (0..10).map(|i| 5.1 + 1.5 * i as f64).collect();
    let mut inputs = BoundInputs::new(1, 0.1, 1.0, 20.0)?;
    let mut monotone = true;
    let eval = |inputs: &mut BoundInputs, kl: f64, v: f64, l: f64| {
        inputs.l = l;
        bounds::pac_bayes_bernstein_rhs(kl, v, inputs)
    };
    for i in 0..kls.len() {
        for j in 0..vs.len() {
            for m in 0..ls.len() {
                let base = eval(&mut inputs, kls[i], vs[j], ls[m]);
                if i + 1 < kls.len() && eval(&mut inputs, kls[i + 1], vs[j], ls[m]) < base {
                    monotone = false;
                }
                if j + 1 < vs.len() && eval(&mut inputs, kls[i], vs[j + 1], ls[m]) < base {
                    monotone = false;
                }
                if m + 1 < ls.len() && eval(&mut inputs, kls[i], vs[j], ls[m + 1]) < base {
                    monotone = false;
                }
            }
        }
    }
    checks.insert(
        "martingale_bound_monotonicity".to_string(),
        CheckReport::boolean(monotone),
    );

    // The regret-bound right side decays strictly in t ...
    let k = config.k;
    let mut decreasing = true;
    let mut prev = bounds::theorem3_regret_rhs(k as u64, k, bounds::l_t(k as u64, config.delta)?)?;
    for t in (k as u64 + 1)..=1_000_000 {
        let cur = bounds::theorem3_regret_rhs(t, k, bounds::l_t(t, config.delta)?)?;
        if cur >= prev {
            decreasing = false;
            break;
        }
        prev = cur;
    }
    checks.insert(
        "regret_bound_decreasing_in_t".to_string(),
        CheckReport::boolean(decreasing),
    );

    // ... at the cube-root rate: an 8x horizon halves it (within 5%).
    let t = 100_000u64;
    let a = bounds::theorem3_regret_rhs(t, k, bounds::l_t(t, config.delta)?)?;
    let b = bounds::theorem3_regret_rhs(8 * t, k, bounds::l_t(8 * t, config.delta)?)?;
    let ratio = b / a;
    checks.insert(
        "regret_bound_cube_root_scaling".to_string(),
        CheckReport::value(ratio, (ratio - 0.5).abs() <= 0.025),
    );

    // The threshold scan is consistent: the step condition holds from the
    // reported start onward.
    let thr = bounds::round_threshold(k, config.delta, 1_000_000)?;
    let mut consistent = thr.max_expression >= k as u64;
    if let Some(start) = thr.step_condition_start {
        for t in start..(start + 1000).min(1_000_000) {
            let l = bounds::l_t(t, config.delta)?;
            if !bounds::step_condition(t, l, epsilon_value(t, k)?) {
                consistent = false;
            }
        }
        if start > 1 {
            let l = bounds::l_t(start - 1, config.delta)?;
            if bounds::step_condition(start - 1, l, epsilon_value(start - 1, k)?) {
                consistent = false;
            }
        }
    }
    checks.insert(
        "round_threshold_consistency".to_string(),
        CheckReport::value(
            thr.certified_start().map(|s| s as f64).unwrap_or(f64::NAN),
            consistent,
        )
        .with_detail("first certified round under the configured (K, delta)"),
    );

    Ok(SuiteReport::from_checks(checks))
}

/// Bernstein moment checks over the synthetic families and the tilt grid.
pub(super) fn run_mgf_suite(config: &ExperimentConfig) -> Result<SuiteReport> {
    let p = &config.mgf;
    let families = [
        MartingaleFamily::rademacher(1, p.c)?,
        MartingaleFamily::predictable_scale(1, p.c)?,
    ];
    let mut checks = BTreeMap::new();
    for (fi, family) in families.iter().enumerate() {
        let max_tilt = 1.0 / family.difference_bound(p.horizon);
        for (li, &fraction) in p.lambda_fractions.iter().enumerate() {
            let unit = (fi * 256 + li) as u16;
            let check = bernstein_mgf_check(
                family,
                fraction * max_tilt,
                p.horizon,
                p.replicas,
                config.master_seed,
                unit,
            )?;
            checks.insert(
                format!("{}_lambda_{}", family.name(), fraction),
                CheckReport {
                    pass: check.pass,
                    rate: None,
                    std_err: Some(check.std_err),
                    n: Some(check.replicas),
                    value: Some(check.sample_mean),
                    detail: Some("sample mean of exp(λM_T - (e-2)λ²V_T)".to_string()),
                },
            );
        }
    }
    Ok(SuiteReport::from_checks(checks))
}

/// Simultaneous-bound violation rates under the adversarial and uniform
/// posterior rules, on shared sample paths.
pub(super) fn run_theorem1_suite(config: &ExperimentConfig) -> Result<SuiteReport> {
    let p = &config.theorem1;
    let family = MartingaleFamily::rademacher(p.h_size, p.c)?;
    let cfg = Theorem1Config {
        delta: p.delta,
        horizon: p.horizon,
        replicas: p.replicas,
        v_bar_margin: p.v_bar_margin,
        v_bar_scale: 1.0,
    };
    let outcomes = theorem1_violation_rates(
        &family,
        &cfg,
        &[PosteriorRule::ArgmaxAbsDeviation, PosteriorRule::Uniform],
        config.master_seed,
        0,
    )?;
    let mut checks = BTreeMap::new();
    for out in &outcomes {
        let name = match out.rule {
            PosteriorRule::ArgmaxAbsDeviation => "argmax_posterior",
            PosteriorRule::Uniform => "uniform_posterior",
        };
        checks.insert(
            name.to_string(),
            CheckReport::rate(out.violation_rate, out.std_err, out.replicas, out.pass)
                .with_detail(format!(
                    "certified rounds {} .. {} ({} total)",
                    out.first_certified_round, cfg.horizon, out.certified_rounds
                )),
        );
    }
    checks.insert(
        "uniform_not_above_argmax".to_string(),
        CheckReport::boolean(outcomes[1].violation_rate <= outcomes[0].violation_rate),
    );
    Ok(SuiteReport::from_checks(checks))
}

/// Randomized change-of-measure and exponential-sum checks.
pub(super) fn run_lemmas_suite(config: &ExperimentConfig) -> Result<SuiteReport> {
    let p = &config.lemmas;
    let mut checks = BTreeMap::new();

    // Change of measure on random triples.
    let mut rng = substream(config.master_seed, StreamDomain::ChangeOfMeasure, 0, 0);
    let mut failures = 0u64;
    let mut max_slack = f64::NEG_INFINITY;
    for _ in 0..p.change_of_measure_trials {
        let h = rng.random_range(2..=p.h_max);
        let rho = random_distribution(h, &mut rng);
        let mu = random_distribution(h, &mut rng);
        let phi: Vec<f64> = (0..h)
            .map(|_| rng.random_range(-p.phi_bound..p.phi_bound))
            .collect();
        let out = change_of_measure_check(&phi, &rho, &mu)?;
        if !out.pass {
            failures += 1;
        }
        max_slack = max_slack.max(out.lhs - out.rhs);
    }
    checks.insert(
        "change_of_measure_randomized".to_string(),
        CheckReport::counted(max_slack, p.change_of_measure_trials, failures == 0)
            .with_detail("max of lhs - rhs over the trials"),
    );

    // The softmax posterior attains the supremum: equality within 1e-12.
    let mut max_gap = 0.0f64;
    for _ in 0..100 {
        let h = rng.random_range(2..=p.h_max);
        let mu = random_distribution(h, &mut rng);
        let phi: Vec<f64> = (0..h)
            .map(|_| rng.random_range(-p.phi_bound..p.phi_bound))
            .collect();
        let shift = phi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let unnorm: Vec<f64> = mu
            .weights()
            .iter()
            .zip(&phi)
            .map(|(&w, &f)| w * (f - shift).exp())
            .collect();
        let z: f64 = unnorm.iter().sum();
        let rho = SimplexDistribution::new(unnorm.iter().map(|u| u / z).collect())?;
        let out = change_of_measure_check(&phi, &rho, &mu)?;
        max_gap = max_gap.max((out.lhs - out.rhs).abs());
    }
    checks.insert(
        "change_of_measure_softmax_equality".to_string(),
        CheckReport::counted(max_gap, 100, max_gap <= 1e-12)
            .with_detail("max |lhs - rhs| at the variational optimum"),
    );

    // Exponential-sum bound on random tuples.
    let mut rng = substream(config.master_seed, StreamDomain::ExpSum, 0, 0);
    let mut failures = 0u64;
    let mut max_slack = f64::NEG_INFINITY;
    for _ in 0..p.expsum_trials {
        let n = rng.random_range(2..=p.n_max);
        let alpha = 10f64.powf(rng.random_range(-2.0..2.0));
        let mut x = vec![0.0f64];
        for _ in 1..n {
            x.push(rng.random_range(-p.x_bound..p.x_bound));
        }
        let b = bounds::expsum_bound(&x, alpha)?;
        if b.lhs > b.rhs + 1e-12 {
            failures += 1;
        }
        max_slack = max_slack.max(b.lhs - b.rhs);
    }
    checks.insert(
        "expsum_randomized".to_string(),
        CheckReport::counted(max_slack, p.expsum_trials, failures == 0)
            .with_detail("max of lhs - rhs over the trials"),
    );

    // Brute-force supremum at n = 2, α = 1 stays below ln 2.
    let mut sup = 0.0f64;
    for i in 0..=200_000u32 {
        let x = 20.0 * i as f64 / 200_000.0;
        let b = bounds::expsum_bound(&[0.0, x], 1.0)?;
        sup = sup.max(b.lhs);
    }
    checks.insert(
        "expsum_brute_force_n2".to_string(),
        CheckReport::value(sup, sup <= 2f64.ln())
            .with_detail("grid supremum of the n = 2 ratio at alpha = 1"),
    );

    Ok(SuiteReport::from_checks(checks))
}

fn random_distribution<R: Rng>(h: usize, rng: &mut R) -> SimplexDistribution {
    let raw: Vec<f64> = (0..h).map(|_| rng.random_range(1e-3..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    SimplexDistribution::new(raw.iter().map(|x| x / sum).collect())
        .expect("normalized positive weights form a distribution")
}
