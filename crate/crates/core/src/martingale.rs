//! Synthetic martingale families and the statistical validators for the
//! concentration machinery: the Bernstein moment inequality, the change of
//! measure inequality, and the simultaneous-over-(posterior, round) martingale
//! bound under an adversarial data-dependent posterior.
//!
//! Three built-in difference families, all with closed-form conditional
//! variances:
//!
//! * `rademacher`: i.i.d. signed steps `±C`, independent across indices;
//! * `predictable_scale`: `X_t(h) = ±σ_t(h)` with the predictable scale
//!   `σ_t(h) = C·|cos(M_{t-1}(h))|` (bounded, known before the draw,
//!   conditionally symmetric);
//! * `bandit_gap`: the importance-weighted gap differences
//!   `(R_t^{a*} - R_t^a) - Δ(a)` of a live policy run, one index per arm, so
//!   its cumulative variances coincide with the environment's ledger.

use rand::Rng;
use rayon::prelude::*;

use crate::bounds::{self, BoundInputs};
use crate::env::BanditEnvironment;
use crate::error::{Error, Result};
use crate::policy::{PolicyState, epsilon_value};
use crate::rng::{StreamDomain, substream};
use crate::simplex::{self, SimplexDistribution};
use crate::stats::{binomial_std_err, mean_and_std_err};

#[derive(Debug, Clone)]
enum FamilyKind {
    Rademacher,
    PredictableScale,
    BanditGap(BanditEnvironment),
}

/// A family of martingale difference sequences indexed by `h`.
#[derive(Debug, Clone)]
pub struct MartingaleFamily {
    kind: FamilyKind,
    h_size: usize,
    scale: f64,
}

impl MartingaleFamily {
    /// Family (a): i.i.d. `±c` steps, independent across the `h_size` indices.
    pub fn rademacher(h_size: usize, c: f64) -> Result<Self> {
        Self::scaled(FamilyKind::Rademacher, h_size, c)
    }

    /// Family (b): conditionally symmetric steps with the predictable,
    /// history-dependent scale `c·|cos(M_{t-1}(h))|`.
    pub fn predictable_scale(h_size: usize, c: f64) -> Result<Self> {
        Self::scaled(FamilyKind::PredictableScale, h_size, c)
    }

    fn scaled(kind: FamilyKind, h_size: usize, c: f64) -> Result<Self> {
        if h_size < 1 {
            return Err(Error::domain("martingale family needs at least one index"));
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::domain(format!("difference scale must be positive, got {c}")));
        }
        Ok(Self { kind, h_size, scale: c })
    }

    /// Family (c): the gap martingale of a policy run over `env`, one index
    /// per arm.
    pub fn bandit_gap(env: BanditEnvironment) -> Self {
        let h_size = env.arm_count();
        Self {
            kind: FamilyKind::BanditGap(env),
            h_size,
            scale: 1.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            FamilyKind::Rademacher => "rademacher",
            FamilyKind::PredictableScale => "predictable_scale",
            FamilyKind::BanditGap(_) => "bandit_gap",
        }
    }

    pub fn h_size(&self) -> usize {
        self.h_size
    }

    /// Uniform bound `C` on `|X_t(h)|` over all rounds `t <= horizon`.
    pub fn difference_bound(&self, horizon: u64) -> f64 {
        match &self.kind {
            FamilyKind::Rademacher | FamilyKind::PredictableScale => self.scale,
            FamilyKind::BanditGap(env) => {
                // |R^{a*} - R^a| <= 1/ε_t (only one is nonzero) plus the gap.
                let eps = epsilon_value(horizon, env.arm_count())
                    .expect("valid environment");
                1.0 / eps + 1.0
            }
        }
    }

    /// Deterministic variance proxy `V̄_t`: the exact cumulative variance cap
    /// inflated by `margin` for the synthetic families, the ledger cap
    /// `2t/ε_t` for the bandit family. `v_scale` multiplies the proxy (used
    /// by the slack-monotonicity checks).
    pub fn v_bar(&self, t: u64, margin: f64, v_scale: f64) -> f64 {
        let base = match &self.kind {
            FamilyKind::Rademacher | FamilyKind::PredictableScale => {
                t as f64 * self.scale * self.scale * (1.0 + margin)
            }
            FamilyKind::BanditGap(env) => {
                let eps = epsilon_value(t, env.arm_count()).expect("valid environment");
                bounds::variance_upper_bound(t, eps)
            }
        };
        base * v_scale
    }

    /// Fresh simulator positioned before round 1.
    pub fn simulator(&self) -> Result<FamilySimulator> {
        let sim_kind = match &self.kind {
            FamilyKind::Rademacher => SimKind::Rademacher { c: self.scale },
            FamilyKind::PredictableScale => SimKind::PredictableScale { c: self.scale },
            FamilyKind::BanditGap(env) => SimKind::BanditGap {
                state: PolicyState::new(env.arm_count())?,
                gaps: env.gaps(),
                best: env.best_arm(),
                env: env.clone(),
            },
        };
        Ok(FamilySimulator {
            t: 0,
            m: vec![0.0; self.h_size],
            v: vec![0.0; self.h_size],
            kind: sim_kind,
        })
    }
}

/// The default trio of built-in families.
///
/// The bandit member uses a Bernoulli environment with `max(h_size, 2)` arms
/// and means spread evenly over `[0.1, 0.9]`.
pub fn builtin_families(h_size: usize, c: f64) -> Result<Vec<MartingaleFamily>> {
    let k = h_size.max(2);
    let means: Vec<f64> = (0..k)
        .map(|i| 0.9 - 0.8 * i as f64 / (k - 1) as f64)
        .collect();
    let env = BanditEnvironment::new(means, crate::env::RewardLaw::Bernoulli)?;
    Ok(vec![
        MartingaleFamily::rademacher(h_size, c)?,
        MartingaleFamily::predictable_scale(h_size, c)?,
        MartingaleFamily::bandit_gap(env),
    ])
}

#[derive(Debug, Clone)]
enum SimKind {
    Rademacher {
        c: f64,
    },
    PredictableScale {
        c: f64,
    },
    BanditGap {
        env: BanditEnvironment,
        state: PolicyState,
        gaps: Vec<f64>,
        best: usize,
    },
}

/// Running sums `M_t(h)` and conditional-variance sums `V_t(h)` of one
/// family realization.
#[derive(Debug, Clone)]
pub struct FamilySimulator {
    t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
    kind: SimKind,
}

impl FamilySimulator {
    /// Rounds completed so far.
    pub fn round(&self) -> u64 {
        self.t
    }

    pub fn m(&self) -> &[f64] {
        &self.m
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    /// Advance one round, drawing every index's difference.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        match &mut self.kind {
            SimKind::Rademacher { c } => {
                for h in 0..self.m.len() {
                    let x = if rng.random::<bool>() { *c } else { -*c };
                    self.m[h] += x;
                    self.v[h] += *c * *c;
                }
            }
            SimKind::PredictableScale { c } => {
                for h in 0..self.m.len() {
                    let sigma = *c * self.m[h].cos().abs();
                    let x = if rng.random::<bool>() { sigma } else { -sigma };
                    self.v[h] += sigma * sigma;
                    self.m[h] += x;
                }
            }
            SimKind::BanditGap { env, state, gaps, best } => {
                let pi = state.current_pi().clone();
                let played = simplex::sample(&pi, rng);
                let reward = env.pull(played, rng)?;
                let r_best = if played == *best { reward / pi.prob(*best) } else { 0.0 };
                for (a, (m, v)) in self.m.iter_mut().zip(self.v.iter_mut()).enumerate() {
                    let r_a = if played == a { reward / pi.prob(a) } else { 0.0 };
                    *m += (r_best - r_a) - gaps[a];
                    *v += env.step_conditional_variance(&pi, a)?;
                }
                state.record(played, reward)?;
                state.advance()?;
            }
        }
        self.t += 1;
        Ok(())
    }
}

/// Outcome of one Bernstein moment check at a fixed tilt.
#[derive(Debug, Clone, Copy)]
pub struct MgfCheck {
    pub lambda: f64,
    pub sample_mean: f64,
    pub std_err: f64,
    pub replicas: u64,
    pub pass: bool,
}

/// Monte Carlo check of `E[exp(λ·M_T - (e-2)·λ²·V_T)] <= 1` on the family's
/// first index.
///
/// `lambda` must lie in `[0, 1/C]` where `C` bounds the differences over the
/// horizon. Passes when the sample mean stays below `1 + 3·std_err`.
pub fn bernstein_mgf_check(
    family: &MartingaleFamily,
    lambda: f64,
    horizon: u64,
    replicas: u64,
    master_seed: u64,
    unit: u16,
) -> Result<MgfCheck> {
    let c = family.difference_bound(horizon);
    if !(0.0..=1.0 / c * (1.0 + 1e-12)).contains(&lambda) {
        return Err(Error::domain(format!(
            "lambda {lambda} outside [0, 1/C] with C = {c}"
        )));
    }
    if horizon < 1 || replicas < 2 {
        return Err(Error::domain("mgf check needs horizon >= 1 and replicas >= 2"));
    }
    let values: Vec<f64> = (0..replicas as u32)
        .into_par_iter()
        .map(|rep| -> Result<f64> {
            let mut rng = substream(master_seed, StreamDomain::Mgf, unit, rep);
            let mut sim = family.simulator()?;
            for _ in 0..horizon {
                sim.step(&mut rng)?;
            }
            Ok((lambda * sim.m()[0] - bounds::E_MINUS_2 * lambda * lambda * sim.v()[0]).exp())
        })
        .collect::<Result<Vec<_>>>()?;
    let (sample_mean, std_err) = mean_and_std_err(&values);
    Ok(MgfCheck {
        lambda,
        sample_mean,
        std_err,
        replicas,
        pass: sample_mean <= 1.0 + 3.0 * std_err,
    })
}

/// Both sides of the change of measure inequality
/// `E_ρ[φ] <= KL(ρ‖μ) + ln E_μ[e^φ]`.
#[derive(Debug, Clone, Copy)]
pub struct ChangeOfMeasure {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    /// `ρ` put mass outside the support of `μ`; the right side is `+∞` and
    /// the check holds vacuously.
    pub kl_infinite: bool,
}

/// Evaluate the change of measure inequality for `phi` under (`rho`, `mu`).
/// The log moment is computed max-shifted.
pub fn change_of_measure_check(
    phi: &[f64],
    rho: &SimplexDistribution,
    mu: &SimplexDistribution,
) -> Result<ChangeOfMeasure> {
    if phi.len() != rho.len() || rho.len() != mu.len() {
        return Err(Error::DimensionMismatch {
            left: phi.len(),
            right: rho.len(),
        });
    }
    if phi.iter().any(|p| !p.is_finite()) {
        return Err(Error::domain("phi must be finite"));
    }
    let lhs = rho.expectation(phi)?;
    let kl = simplex::kl_divergence(rho, mu)?;
    if kl.is_infinite() {
        return Ok(ChangeOfMeasure {
            lhs,
            rhs: f64::INFINITY,
            pass: true,
            kl_infinite: true,
        });
    }
    let shift = phi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let moment: f64 = mu
        .weights()
        .iter()
        .zip(phi)
        .map(|(&w, &p)| w * (p - shift).exp())
        .sum();
    let rhs = kl + shift + moment.ln();
    Ok(ChangeOfMeasure {
        lhs,
        rhs,
        pass: lhs <= rhs + bounds::VIOLATION_TOLERANCE,
        kl_infinite: false,
    })
}

/// How the adversarial per-round posterior is formed in
/// [`theorem1_violation_rate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PosteriorRule {
    /// Point mass on `argmax_h |M_t(h)|`: the worst data-dependent choice,
    /// with `KL = ln |H|` against the uniform reference.
    ArgmaxAbsDeviation,
    /// The uniform posterior (`KL = 0`).
    Uniform,
}

/// Parameters of the simultaneous-bound stress test.
#[derive(Debug, Clone, Copy)]
pub struct Theorem1Config {
    pub delta: f64,
    pub horizon: u64,
    pub replicas: u64,
    /// Relative inflation of the variance proxy above the exact cumulative
    /// variance for the synthetic families.
    pub v_bar_margin: f64,
    /// Extra multiplier on the proxy (1.0 = as configured).
    pub v_bar_scale: f64,
}

/// Outcome of the simultaneous-bound stress test for one posterior rule.
#[derive(Debug, Clone, Copy)]
pub struct Theorem1Outcome {
    pub rule: PosteriorRule,
    /// Fraction of replicas with at least one certified round where
    /// `|M_t(ρ_t)|` exceeded the bound.
    pub violation_rate: f64,
    pub std_err: f64,
    pub replicas: u64,
    /// First round at which the moment condition holds for the configured
    /// proxy; rounds before it are not certified and not counted.
    pub first_certified_round: u64,
    pub certified_rounds: u64,
    pub pass: bool,
}

/// Violation rate of the simultaneous martingale bound under an adversarial
/// posterior, against the uniform reference distribution.
///
/// Per replica and per certified round `t <= horizon`, the posterior from
/// `rule` is formed from the realized martingales and flagged when
/// `|M_t(ρ_t)|` exceeds the bound; a replica counts once no matter how many
/// rounds flag. Passes when the rate stays below `delta`.
pub fn theorem1_violation_rate(
    family: &MartingaleFamily,
    cfg: &Theorem1Config,
    rule: PosteriorRule,
    master_seed: u64,
    unit: u16,
) -> Result<Theorem1Outcome> {
    let outcomes = theorem1_violation_rates(family, cfg, &[rule], master_seed, unit)?;
    Ok(outcomes[0])
}

/// [`theorem1_violation_rate`] for several posterior rules evaluated on the
/// same sample paths, for rule-to-rule comparisons.
pub fn theorem1_violation_rates(
    family: &MartingaleFamily,
    cfg: &Theorem1Config,
    rules: &[PosteriorRule],
    master_seed: u64,
    unit: u16,
) -> Result<Vec<Theorem1Outcome>> {
    if cfg.replicas < 1 || cfg.horizon < 1 || rules.is_empty() {
        return Err(Error::domain("theorem-1 check needs replicas, rounds and rules"));
    }
    if !(cfg.delta > 0.0 && cfg.delta < 1.0) {
        return Err(Error::domain("delta must lie in (0, 1)"));
    }
    let c = family.difference_bound(cfg.horizon);
    let h = family.h_size();

    // Per-round inputs and certification are deterministic; precompute once.
    let mut inputs = Vec::with_capacity(cfg.horizon as usize);
    let mut certified = Vec::with_capacity(cfg.horizon as usize);
    for t in 1..=cfg.horizon {
        let v_bar = family.v_bar(t, cfg.v_bar_margin, cfg.v_bar_scale);
        let inp = BoundInputs::new(t, cfg.delta, c, v_bar)?;
        certified.push(bounds::check_technical_condition(&inp));
        inputs.push(inp);
    }
    let first_certified = certified.iter().position(|&x| x).ok_or_else(|| {
        Error::domain(format!(
            "moment condition unsatisfiable for every t <= {} with the configured proxy",
            cfg.horizon
        ))
    })? as u64
        + 1;
    let certified_rounds = certified.iter().filter(|&&x| x).count() as u64;
    let kl_argmax = (h as f64).ln();

    let per_replica: Vec<Vec<bool>> = (0..cfg.replicas as u32)
        .into_par_iter()
        .map(|rep| -> Result<Vec<bool>> {
            let mut rng = substream(master_seed, StreamDomain::Theorem1, unit, rep);
            let mut sim = family.simulator()?;
            let mut violated = vec![false; rules.len()];
            for t in 1..=cfg.horizon {
                sim.step(&mut rng)?;
                if !certified[(t - 1) as usize] {
                    continue;
                }
                let inp = &inputs[(t - 1) as usize];
                for (ri, rule) in rules.iter().enumerate() {
                    if violated[ri] {
                        continue;
                    }
                    let (kl, m_rho, v_rho) = match rule {
                        PosteriorRule::ArgmaxAbsDeviation => {
                            let mut star = 0;
                            for i in 1..h {
                                if sim.m()[i].abs() > sim.m()[star].abs() {
                                    star = i;
                                }
                            }
                            (kl_argmax, sim.m()[star], sim.v()[star])
                        }
                        PosteriorRule::Uniform => {
                            let inv = 1.0 / h as f64;
                            let m: f64 = sim.m().iter().sum::<f64>() * inv;
                            let v: f64 = sim.v().iter().sum::<f64>() * inv;
                            (0.0, m, v)
                        }
                    };
                    let rhs = bounds::pac_bayes_bernstein_rhs(kl, v_rho, inp);
                    if m_rho.abs() > rhs {
                        violated[ri] = true;
                    }
                }
            }
            Ok(violated)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(rules
        .iter()
        .enumerate()
        .map(|(ri, &rule)| {
            let violations = per_replica.iter().filter(|flags| flags[ri]).count() as u64;
            let rate = violations as f64 / cfg.replicas as f64;
            Theorem1Outcome {
                rule,
                violation_rate: rate,
                std_err: binomial_std_err(rate, cfg.replicas),
                replicas: cfg.replicas,
                first_certified_round: first_certified,
                certified_rounds,
                pass: rate <= cfg.delta,
            }
        })
        .collect())
}
