//! Stochastic reward environments with oracle access to means, gaps and the
//! exact conditional moments of the importance-weighted gap martingale.
//!
//! Rewards live in `[0, 1]`. Two laws are provided: Bernoulli (the
//! highest-variance law for a given mean) and a deterministic fixed reward
//! (for exact-arithmetic tests). Both keep every oracle moment closed-form.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::SimplexDistribution;

/// Per-arm reward law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardLaw {
    /// Reward is 1 with probability `R(a)`, else 0.
    Bernoulli,
    /// Reward is exactly `R(a)` on every pull.
    Fixed,
}

/// A `K >= 2` armed environment with known means.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditEnvironment {
    arm_means: Vec<f64>,
    law: RewardLaw,
}

impl BanditEnvironment {
    pub fn new(arm_means: Vec<f64>, law: RewardLaw) -> Result<Self> {
        if arm_means.len() < 2 {
            return Err(Error::domain("environment needs at least two arms"));
        }
        if arm_means.iter().any(|m| !m.is_finite() || *m < 0.0 || *m > 1.0) {
            return Err(Error::domain("arm means must lie in [0, 1]"));
        }
        Ok(Self { arm_means, law })
    }

    pub fn arm_count(&self) -> usize {
        self.arm_means.len()
    }

    pub fn law(&self) -> RewardLaw {
        self.law
    }

    pub fn means(&self) -> &[f64] {
        &self.arm_means
    }

    /// Expected reward of arm `a`.
    pub fn mean(&self, a: usize) -> f64 {
        self.arm_means[a]
    }

    /// Lowest index among the arms of maximal mean.
    pub fn best_arm(&self) -> usize {
        let mut best = 0;
        for (i, &m) in self.arm_means.iter().enumerate().skip(1) {
            if m > self.arm_means[best] {
                best = i;
            }
        }
        best
    }

    /// Lowest index among the arms of minimal mean.
    pub fn worst_arm(&self) -> usize {
        let mut worst = 0;
        for (i, &m) in self.arm_means.iter().enumerate().skip(1) {
            if m < self.arm_means[worst] {
                worst = i;
            }
        }
        worst
    }

    /// Gap `Δ(a) = R(a*) - R(a)`.
    pub fn gap(&self, a: usize) -> f64 {
        self.arm_means[self.best_arm()] - self.arm_means[a]
    }

    /// All gaps.
    pub fn gaps(&self) -> Vec<f64> {
        let best = self.arm_means[self.best_arm()];
        self.arm_means.iter().map(|m| best - m).collect()
    }

    /// Expected gap of a distribution over arms, `Δ(ρ) = E_ρ[Δ(a)]`.
    pub fn expected_gap(&self, rho: &SimplexDistribution) -> Result<f64> {
        rho.expectation(&self.gaps())
    }

    /// Draw one reward from arm `a`.
    pub fn pull<R: Rng + ?Sized>(&self, a: usize, rng: &mut R) -> Result<f64> {
        if a >= self.arm_count() {
            return Err(Error::domain(format!(
                "arm {a} out of range for K = {}",
                self.arm_count()
            )));
        }
        Ok(match self.law {
            RewardLaw::Bernoulli => {
                if rng.random::<f64>() < self.arm_means[a] {
                    1.0
                } else {
                    0.0
                }
            }
            RewardLaw::Fixed => self.arm_means[a],
        })
    }

    /// Second moment `E[reward(a)^2]` of the reward law at arm `a`.
    pub fn second_moment(&self, a: usize) -> f64 {
        match self.law {
            RewardLaw::Bernoulli => self.arm_means[a],
            RewardLaw::Fixed => self.arm_means[a] * self.arm_means[a],
        }
    }

    /// Exact conditional variance of one step of the importance-weighted gap
    /// martingale for arm `a` under sampling distribution `pi`:
    ///
    /// `E[((R^{a*} - R^a) - Δ(a))^2 | history]
    ///    = m(a*)/π(a*) + m(a)/π(a) - Δ(a)^2`,
    ///
    /// where `m(·)` is the reward law's second moment. Zero for the best arm.
    pub fn step_conditional_variance(
        &self,
        pi: &SimplexDistribution,
        a: usize,
    ) -> Result<f64> {
        if pi.len() != self.arm_count() {
            return Err(Error::DimensionMismatch {
                left: pi.len(),
                right: self.arm_count(),
            });
        }
        if a >= self.arm_count() {
            return Err(Error::domain(format!("arm {a} out of range")));
        }
        let best = self.best_arm();
        if a == best {
            return Ok(0.0);
        }
        if pi.prob(a) == 0.0 || pi.prob(best) == 0.0 {
            return Err(Error::domain(
                "importance weight undefined: played arm or best arm has zero probability",
            ));
        }
        let gap = self.gap(a);
        let v = self.second_moment(best) / pi.prob(best) + self.second_moment(a) / pi.prob(a)
            - gap * gap;
        Ok(v.max(0.0))
    }
}

/// Running per-arm cumulative variances `W_t(a)` of the gap martingale,
/// accumulated analytically from the conditional expectations.
#[derive(Debug, Clone)]
pub struct VarianceLedger {
    w: Vec<f64>,
    t: u64,
}

impl VarianceLedger {
    pub fn new(k: usize) -> Self {
        Self { w: vec![0.0; k], t: 0 }
    }

    pub fn round(&self) -> u64 {
        self.t
    }

    pub fn w(&self, a: usize) -> f64 {
        self.w[a]
    }

    pub fn values(&self) -> &[f64] {
        &self.w
    }

    pub fn max_w(&self) -> f64 {
        self.w.iter().copied().fold(0.0, f64::max)
    }

    /// Expectation `Σ_a ρ(a) W_t(a)`.
    pub fn expectation(&self, rho: &SimplexDistribution) -> Result<f64> {
        rho.expectation(&self.w)
    }

    /// Add one round's conditional variances under sampling distribution `pi`.
    pub fn accumulate(&mut self, env: &BanditEnvironment, pi: &SimplexDistribution) -> Result<()> {
        if self.w.len() != env.arm_count() {
            return Err(Error::DimensionMismatch {
                left: self.w.len(),
                right: env.arm_count(),
            });
        }
        for a in 0..self.w.len() {
            self.w[a] += env.step_conditional_variance(pi, a)?;
        }
        self.t += 1;
        Ok(())
    }
}
