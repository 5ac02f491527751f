//! One bandit replica: run the exponential-weights policy for the configured
//! horizon, track the variance ledger, and evaluate every per-round bound.

use crate::bounds::{
    self, BoundRow, RoundThreshold, VIOLATION_TOLERANCE, variance_upper_bound,
};
use crate::env::{BanditEnvironment, VarianceLedger};
use crate::error::Result;
use crate::policy::PolicyState;
use crate::rng::replica_stream;
use crate::simplex;

/// Which rounds get a CSV row.
#[derive(Debug, Clone, Copy)]
pub enum StrideRule {
    /// Every round below 256 plus powers of two plus the final round.
    Default,
    /// Every `s`-th round plus the final round.
    Every(u64),
}

impl StrideRule {
    pub fn emit(&self, t: u64, horizon: u64) -> bool {
        t == horizon
            || match self {
                StrideRule::Default => t < 256 || t.is_power_of_two(),
                StrideRule::Every(s) => t.is_multiple_of(*s),
            }
    }
}

/// Immutable inputs shared by all replicas of a bandit run.
#[derive(Debug, Clone)]
pub struct BanditTask {
    pub env: BanditEnvironment,
    pub delta: f64,
    pub horizon: u64,
    pub master_seed: u64,
    pub stride: StrideRule,
    pub warmup_round_robin: bool,
    pub threshold: RoundThreshold,
}

/// Regret sample at a stride round.
#[derive(Debug, Clone, Copy)]
pub struct RegretPoint {
    pub t: u64,
    pub instant: f64,
    pub cumulative: f64,
}

/// Violation accounting for one replica.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReplicaChecks {
    /// Gap bound broke at some certified round with the Gibbs posterior.
    pub thm2_posterior_violation: bool,
    /// Gap bound broke at some certified round with the worst-arm point mass.
    pub thm2_worst_arm_violation: bool,
    /// Regret bound broke at some certified round.
    pub thm3_violation: bool,
    pub lemma1_violations: u64,
    pub lemma5_violations: u64,
    pub regret_decomp_violations: u64,
    /// Rounds `t >= K` where `min_a π_t(a)` fell below `ε_t`.
    pub floor_violations: u64,
    pub thm2_certified_rounds: u64,
    pub thm3_certified_rounds: u64,
}

/// Everything one replica produces.
#[derive(Debug, Clone)]
pub struct ReplicaOutcome {
    pub replica: u32,
    pub rows: Vec<BoundRow>,
    pub regret: Vec<RegretPoint>,
    pub checks: ReplicaChecks,
    pub final_cumulative_regret: f64,
}

/// Run one replica to the horizon.
pub fn run_replica(task: &BanditTask, replica: u32) -> Result<ReplicaOutcome> {
    let env = &task.env;
    let k = env.arm_count();
    let best = env.best_arm();
    let worst = env.worst_arm();
    let gaps = env.gaps();

    let mut rng = replica_stream(task.master_seed, replica);
    let mut state = PolicyState::new(k)?;
    let mut ledger = VarianceLedger::new(k);
    let mut checks = ReplicaChecks::default();
    let mut rows = Vec::new();
    let mut regret = Vec::new();
    let mut cumulative = 0.0;
    // Running minimum of min_a π_τ(a) over τ <= t: the gap bound's floor
    // premise asks ε_t to stay below it.
    let mut min_pi_seen = f64::INFINITY;

    for t in 1..=task.horizon {
        let pi = state.current_pi().clone();
        let schedules = *state.schedules();
        let gamma_t = schedules.gamma(t);
        let eps_t = schedules.epsilon(t);
        let eps_next = schedules.epsilon(t + 1);
        let l = bounds::l_t(t, task.delta)?;
        min_pi_seen = min_pi_seen.min(pi.min_weight());

        if t >= k as u64 && pi.min_weight() < eps_t - 1e-15 {
            checks.floor_violations += 1;
        }

        // Play the round.
        let arm = if task.warmup_round_robin && t < k as u64 {
            ((t - 1) % k as u64) as usize
        } else {
            simplex::sample(&pi, &mut rng)
        };
        let reward = env.pull(arm, &mut rng)?;
        state.record(arm, reward)?;
        ledger.accumulate(env, &pi)?;

        // Post-round diagnostics.
        let rhat = state.empirical_mean_rewards();
        let rho_exp = state.posterior()?;
        let mu_exp = bounds::gibbs_prior(env.means(), gamma_t)?;
        let kl_rho_mu = simplex::kl_divergence(&rho_exp, &mu_exp)?;
        let emp_gaps: Vec<f64> = rhat.iter().map(|r| rhat[best] - r).collect();
        let gap_rho_true = rho_exp.expectation(&gaps)?;
        let gap_rho_emp = rho_exp.expectation(&emp_gaps)?;
        let gap_mu_true = mu_exp.expectation(&gaps)?;
        let gap_mu_emp = mu_exp.expectation(&emp_gaps)?;
        let v_rho = ledger.expectation(&rho_exp)?;

        // Gap bound, Gibbs posterior route.
        let thm2 = bounds::gap_bound_rhs(kl_rho_mu, t, eps_t, l)?;
        let thm2_certified = thm2.certified && eps_t <= min_pi_seen * (1.0 + 1e-12);
        if thm2_certified {
            checks.thm2_certified_rounds += 1;
        }
        let thm2_violation =
            (gap_rho_true - gap_rho_emp).abs() > thm2.value + VIOLATION_TOLERANCE;
        if thm2_certified && thm2_violation {
            checks.thm2_posterior_violation = true;
        }

        // Gap bound, point mass on the worst arm.
        let kl_worst = -mu_exp.prob(worst).ln();
        let thm2_worst = bounds::gap_bound_rhs(kl_worst, t, eps_t, l)?;
        if thm2_certified
            && (gaps[worst] - emp_gaps[worst]).abs() > thm2_worst.value + VIOLATION_TOLERANCE
        {
            checks.thm2_worst_arm_violation = true;
        }

        // Cumulative-variance cap (holds from the first floored round on).
        let lemma1_lhs = ledger.max_w();
        let lemma1_rhs = variance_upper_bound(t, eps_t);
        if t >= k as u64 && lemma1_lhs > lemma1_rhs + VIOLATION_TOLERANCE {
            checks.lemma1_violations += 1;
        }

        // KL upper bound from the gap estimates.
        let lemma5_rhs =
            bounds::kl_bound_lemma5_rhs(gamma_t, gap_rho_true, gap_rho_emp, gap_mu_true, gap_mu_emp);
        if kl_rho_mu > lemma5_rhs + VIOLATION_TOLERANCE {
            checks.lemma5_violations += 1;
        }

        // Next round's distribution; from t = K-1 on it is the smoothed
        // posterior whose expected gap both remaining bounds dominate.
        let next_pi = state.next_sampling_distribution()?;
        let regret_decomp_rhs =
            bounds::regret_decomposition_rhs(gap_rho_true, gap_rho_emp, gamma_t, k, eps_next);
        let thm3_rhs = bounds::theorem3_regret_rhs(t, k, l)?;
        let thm3_certified =
            t >= task.threshold.max_expression && bounds::step_condition(t, l, eps_t);
        let mut thm3_violation = false;
        if t >= k as u64 - 1 {
            let gap_tilde = next_pi.expectation(&gaps)?;
            if gap_tilde > regret_decomp_rhs + VIOLATION_TOLERANCE {
                checks.regret_decomp_violations += 1;
            }
            thm3_violation = gap_tilde > thm3_rhs + VIOLATION_TOLERANCE;
            if thm3_certified {
                checks.thm3_certified_rounds += 1;
                if thm3_violation {
                    checks.thm3_violation = true;
                }
            }
        }

        let instant = pi.expectation(&gaps)?;
        cumulative += instant;

        if task.stride.emit(t, task.horizon) {
            rows.push(BoundRow {
                replica,
                t,
                kl_rho_mu,
                v_rho,
                delta_rho_true: gap_rho_true,
                delta_rho_emp: gap_rho_emp,
                thm2_rhs: thm2.value,
                thm2_violation,
                lemma1_lhs,
                lemma1_rhs,
                lemma5_lhs: kl_rho_mu,
                lemma5_rhs,
                regret_decomp_rhs,
                thm3_rhs,
                thm3_certified,
                thm3_violation,
            });
            regret.push(RegretPoint {
                t,
                instant,
                cumulative,
            });
        }

        state.advance_with(next_pi)?;
    }

    Ok(ReplicaOutcome {
        replica,
        rows,
        regret,
        checks,
        final_cumulative_regret: cumulative,
    })
}
