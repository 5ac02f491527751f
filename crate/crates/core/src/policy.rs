//! The exponential-weights bandit policy: uniform warmup for rounds `1..K-1`,
//! importance-weighted reward estimates, a Gibbs posterior over arms with
//! temperature `γ_t`, and an `ε_t` uniform-smoothing floor on the sampling
//! distribution.
//!
//! Schedules: `γ_t = K^(-1/3)·t^(1/3)·√(ln K)` (increasing) and
//! `ε_t = K^(-2/3)·t^(-1/3)` (decreasing, with `K·ε_t <= 1` from `t = K` on).
//! Round indices start at 1. The first smoothed distribution is `π_K`, built
//! from the estimates after round `K-1`; since `K·ε_K = 1` it is uniform, so
//! the warmup hand-off is seamless.

use crate::error::{Error, Result};
use crate::simplex::{self, GibbsScores, SimplexDistribution};

/// Exploration temperature `γ_t = K^(-1/3)·t^(1/3)·√(ln K)`.
pub fn gamma_value(t: u64, k: usize) -> Result<f64> {
    check_schedule_args(t, k)?;
    let kf = k as f64;
    Ok(kf.powf(-1.0 / 3.0) * (t as f64).powf(1.0 / 3.0) * (kf.ln()).sqrt())
}

/// Sampling floor `ε_t = K^(-2/3)·t^(-1/3)`.
pub fn epsilon_value(t: u64, k: usize) -> Result<f64> {
    check_schedule_args(t, k)?;
    let kf = k as f64;
    Ok(kf.powf(-2.0 / 3.0) * (t as f64).powf(-1.0 / 3.0))
}

fn check_schedule_args(t: u64, k: usize) -> Result<()> {
    if t < 1 {
        return Err(Error::domain("round index starts at 1"));
    }
    if k < 2 {
        return Err(Error::domain("schedules need K >= 2 (ln K must be positive)"));
    }
    Ok(())
}

/// The `(γ_t, ε_t)` schedule pair for a fixed arm count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schedules {
    k: usize,
}

impl Schedules {
    pub fn new(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::domain("schedules need K >= 2"));
        }
        Ok(Self { k })
    }

    pub fn arm_count(&self) -> usize {
        self.k
    }

    pub fn gamma(&self, t: u64) -> f64 {
        gamma_value(t, self.k).expect("validated at construction")
    }

    pub fn epsilon(&self, t: u64) -> f64 {
        epsilon_value(t, self.k).expect("validated at construction")
    }
}

/// Mutable state of one policy run.
#[derive(Debug, Clone)]
pub struct PolicyState {
    t: u64,
    cum_iw_reward: Vec<f64>,
    current_pi: SimplexDistribution,
    schedules: Schedules,
}

impl PolicyState {
    /// Fresh state at round 1 with the uniform sampling distribution.
    pub fn new(k: usize) -> Result<Self> {
        let schedules = Schedules::new(k)?;
        Ok(Self {
            t: 1,
            cum_iw_reward: vec![0.0; k],
            current_pi: SimplexDistribution::uniform(k),
            schedules,
        })
    }

    pub fn round(&self) -> u64 {
        self.t
    }

    pub fn arm_count(&self) -> usize {
        self.cum_iw_reward.len()
    }

    pub fn schedules(&self) -> &Schedules {
        &self.schedules
    }

    /// Distribution the current round samples from.
    pub fn current_pi(&self) -> &SimplexDistribution {
        &self.current_pi
    }

    pub fn cum_iw_reward(&self) -> &[f64] {
        &self.cum_iw_reward
    }

    /// Importance-weighted mean estimates `R̂_t(a) = cum(a)/t`.
    pub fn empirical_mean_rewards(&self) -> Vec<f64> {
        self.cum_iw_reward
            .iter()
            .map(|c| c / self.t as f64)
            .collect()
    }

    /// Record the round-`t` observation: the played arm's cumulative
    /// importance-weighted reward grows by `reward / π_t(a)`, all other arms
    /// are untouched. The round index only advances in [`Self::advance`].
    pub fn record(&mut self, a_played: usize, reward: f64) -> Result<()> {
        if a_played >= self.arm_count() {
            return Err(Error::domain(format!("arm {a_played} out of range")));
        }
        if !(0.0..=1.0).contains(&reward) {
            return Err(Error::domain(format!("reward {reward} outside [0, 1]")));
        }
        let p = self.current_pi.prob(a_played);
        if p == 0.0 {
            return Err(Error::domain(
                "played arm has zero probability; importance weight undefined",
            ));
        }
        self.cum_iw_reward[a_played] += reward / p;
        Ok(())
    }

    /// Gibbs posterior over arms at the current round:
    /// weights proportional to `exp(γ_t · R̂_t(a))`.
    pub fn posterior(&self) -> Result<SimplexDistribution> {
        let scores = GibbsScores::new(self.empirical_mean_rewards(), self.schedules.gamma(self.t))?;
        simplex::gibbs(&scores)
    }

    /// The distribution for round `t + 1`: uniform while the next round is
    /// still warmup (`t + 1 < K`), otherwise the posterior smoothed with the
    /// `ε_{t+1}` floor.
    pub fn next_sampling_distribution(&self) -> Result<SimplexDistribution> {
        let k = self.arm_count();
        if self.t + 1 < k as u64 {
            return Ok(SimplexDistribution::uniform(k));
        }
        let eps_next = self.schedules.epsilon(self.t + 1);
        if eps_next * k as f64 > 1.0 + 1e-9 {
            return Err(Error::domain(format!(
                "K·ε_{{t+1}} = {} > 1: smoothing undefined before round K",
                eps_next * k as f64
            )));
        }
        simplex::mix_with_uniform(&self.posterior()?, eps_next)
    }

    /// Finish the round: install the provided next distribution and advance
    /// `t`. Callers that do not need the distribution beforehand can use
    /// [`Self::advance`].
    pub fn advance_with(&mut self, next_pi: SimplexDistribution) -> Result<()> {
        if next_pi.len() != self.arm_count() {
            return Err(Error::DimensionMismatch {
                left: next_pi.len(),
                right: self.arm_count(),
            });
        }
        self.current_pi = next_pi;
        self.t += 1;
        Ok(())
    }

    /// Compute the next sampling distribution and advance the round.
    pub fn advance(&mut self) -> Result<()> {
        let next = self.next_sampling_distribution()?;
        self.advance_with(next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{BanditEnvironment, RewardLaw};
    use crate::rng::{StreamDomain, substream};
    use crate::stats::mean_and_std_err;

    #[test]
    fn schedule_values_match_closed_forms() {
        // γ(8, 8) = √(ln 8), ε(8, 8) = 1/8
        let g = gamma_value(8, 8).unwrap();
        assert!((g - (8f64).ln().sqrt()).abs() < 1e-12);
        let e = epsilon_value(8, 8).unwrap();
        assert!((e - 0.125).abs() < 1e-12);

        // boundary case K = 2, t = 2: ε = 1/2 = 1/K exactly
        let g = gamma_value(2, 2).unwrap();
        assert!((g - (2f64).ln().sqrt()).abs() < 1e-12);
        let e = epsilon_value(2, 2).unwrap();
        assert!((e - 0.5).abs() < 1e-12);
    }

    #[test]
    fn schedules_reject_degenerate_k() {
        assert!(gamma_value(1, 1).is_err());
        assert!(epsilon_value(1, 0).is_err());
        assert!(Schedules::new(1).is_err());
    }

    #[test]
    fn gamma_increases_and_epsilon_decreases() {
        let s = Schedules::new(5).unwrap();
        for t in 1..1000u64 {
            assert!(s.gamma(t + 1) > s.gamma(t));
            assert!(s.epsilon(t + 1) < s.epsilon(t));
        }
        // K·ε_t <= 1 from t = K on
        for t in 5..1000u64 {
            assert!(5.0 * s.epsilon(t) <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn record_applies_importance_weight() {
        let mut state = PolicyState::new(2).unwrap();
        state.record(0, 1.0).unwrap();
        assert!((state.cum_iw_reward()[0] - 2.0).abs() < 1e-15);
        assert_eq!(state.cum_iw_reward()[1], 0.0);
    }

    #[test]
    fn record_zero_reward_changes_nothing() {
        let mut state = PolicyState::new(3).unwrap();
        state.record(1, 0.0).unwrap();
        assert_eq!(state.cum_iw_reward(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn record_uniform_k4_half_reward() {
        let mut state = PolicyState::new(4).unwrap();
        state.record(2, 0.5).unwrap();
        assert!((state.cum_iw_reward()[2] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn record_rejects_bad_inputs() {
        let mut state = PolicyState::new(2).unwrap();
        assert!(state.record(0, 1.5).is_err());
        assert!(state.record(0, -0.1).is_err());
        assert!(state.record(5, 0.5).is_err());
    }

    #[test]
    fn posterior_is_uniform_for_equal_scores() {
        let state = PolicyState::new(3).unwrap();
        let d = state.posterior().unwrap();
        for &w in d.weights() {
            assert!((w - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn posterior_two_arm_closed_form() {
        // K = 2, R̂ = [1, 0], γ = 1  →  [e/(1+e), 1/(1+e)]
        let mut state = PolicyState::new(2).unwrap();
        state.cum_iw_reward = vec![1.0, 0.0];
        let scores = GibbsScores::new(state.empirical_mean_rewards(), 1.0).unwrap();
        let d = simplex::gibbs(&scores).unwrap();
        let e = std::f64::consts::E;
        assert!((d.prob(0) - e / (1.0 + e)).abs() < 1e-15);
        assert!((d.prob(1) - 1.0 / (1.0 + e)).abs() < 1e-15);
    }

    #[test]
    fn posterior_concentrates_at_large_temperature() {
        // γ = 1e4 with a unique max and score gap 0.1 puts >= 1 - 1e-9 on it.
        let scores = GibbsScores::new(vec![0.5, 0.6, 0.4], 1e4).unwrap();
        let d = simplex::gibbs(&scores).unwrap();
        assert!(d.prob(1) >= 1.0 - 1e-9);
    }

    #[test]
    fn posterior_is_shift_invariant_in_cum_rewards() {
        let mut a = PolicyState::new(4).unwrap();
        a.cum_iw_reward = vec![0.3, 2.0, 1.1, 0.0];
        a.t = 7;
        let mut b = a.clone();
        for c in &mut b.cum_iw_reward {
            *c += 3.5;
        }
        let da = a.posterior().unwrap();
        let db = b.posterior().unwrap();
        for (x, y) in da.weights().iter().zip(db.weights()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn warmup_rounds_stay_uniform() {
        // K = 8: forming π_2 .. π_7 (t = 1..6 < K-1) stays uniform.
        let k = 8;
        let mut state = PolicyState::new(k).unwrap();
        state.record(3, 1.0).unwrap();
        for _ in 0..(k as u64 - 2) {
            let next = state.next_sampling_distribution().unwrap();
            assert_eq!(next.weights(), SimplexDistribution::uniform(k).weights());
            state.advance().unwrap();
            // reward 0 keeps the estimates unchanged but rounds move on
            state.record(0, 0.0).unwrap();
        }
        assert_eq!(state.round(), k as u64 - 1);
    }

    #[test]
    fn pi_k_is_uniform_regardless_of_posterior() {
        // K·ε_K = 1 exactly, so forming π_8 at t = 7 fully smooths.
        let k = 8;
        let mut state = PolicyState::new(k).unwrap();
        state.t = 7;
        state.cum_iw_reward[5] = 40.0; // wildly skewed estimates
        let next = state.next_sampling_distribution().unwrap();
        for &w in next.weights() {
            assert!((w - 1.0 / k as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn pi_64_has_sixteenth_floor() {
        // K = 8, forming π_64: ε_64 = 1/16, minimum entry >= 1/16.
        let k = 8;
        let mut state = PolicyState::new(k).unwrap();
        state.t = 63;
        state.cum_iw_reward[0] = 630.0;
        let eps = epsilon_value(64, k).unwrap();
        assert!((eps - 1.0 / 16.0).abs() < 1e-12);
        let next = state.next_sampling_distribution().unwrap();
        assert!(next.min_weight() >= eps - 1e-15);
    }

    #[test]
    fn epsilon_floor_holds_every_round_of_a_run() {
        let k = 5;
        let env = BanditEnvironment::new(vec![0.9, 0.7, 0.5, 0.3, 0.1], RewardLaw::Bernoulli)
            .unwrap();
        let mut state = PolicyState::new(k).unwrap();
        let mut rng = substream(21, StreamDomain::Aux, 3, 0);
        for t in 1..=400u64 {
            assert_eq!(state.round(), t);
            if t >= k as u64 {
                let eps = state.schedules().epsilon(t);
                assert!(
                    state.current_pi().min_weight() >= eps - 1e-15,
                    "floor broken at t = {t}"
                );
            } else {
                // warmup rounds sample uniformly
                assert_eq!(
                    state.current_pi().weights(),
                    SimplexDistribution::uniform(k).weights()
                );
            }
            let a = simplex::sample(state.current_pi(), &mut rng);
            let r = env.pull(a, &mut rng).unwrap();
            state.record(a, r).unwrap();
            state.advance().unwrap();
        }
    }

    #[test]
    fn runs_are_deterministic_given_seed() {
        let env = BanditEnvironment::new(vec![0.8, 0.4, 0.2], RewardLaw::Bernoulli).unwrap();
        let run = |seed: u64| {
            let mut state = PolicyState::new(3).unwrap();
            let mut rng = substream(seed, StreamDomain::Aux, 3, 1);
            let mut actions = Vec::new();
            let mut rewards = Vec::new();
            for _ in 0..200 {
                let a = simplex::sample(state.current_pi(), &mut rng);
                let r = env.pull(a, &mut rng).unwrap();
                actions.push(a);
                rewards.push(r);
                state.record(a, r).unwrap();
                state.advance().unwrap();
            }
            (actions, rewards, state.cum_iw_reward().to_vec())
        };
        let (a1, r1, c1) = run(77);
        let (a2, r2, c2) = run(77);
        assert_eq!(a1, a2);
        assert_eq!(r1, r2);
        // bit-identical accumulators, not merely close
        assert_eq!(c1, c2);
        let (a3, ..) = run(78);
        assert_ne!(a1, a3);
    }

    #[test]
    fn rhat_is_unbiased_across_replicas() {
        // Replica-mean of R̂_t(a) at fixed t within 3 SE of R(a) for every arm.
        let k = 3;
        let t_fixed = 50u64;
        let replicas = 10_000usize;
        let env = BanditEnvironment::new(vec![0.8, 0.5, 0.2], RewardLaw::Bernoulli).unwrap();
        let mut per_arm: Vec<Vec<f64>> = (0..k).map(|_| Vec::with_capacity(replicas)).collect();
        for rep in 0..replicas {
            let mut state = PolicyState::new(k).unwrap();
            let mut rng = substream(31, StreamDomain::Aux, 4, rep as u32);
            for _ in 0..t_fixed {
                let a = simplex::sample(state.current_pi(), &mut rng);
                let r = env.pull(a, &mut rng).unwrap();
                state.record(a, r).unwrap();
                state.advance().unwrap();
            }
            // R̂ at round t_fixed: accumulators divided by t_fixed
            for (bucket, cum) in per_arm.iter_mut().zip(state.cum_iw_reward()) {
                bucket.push(cum / t_fixed as f64);
            }
        }
        for (a, bucket) in per_arm.iter().enumerate() {
            let (mean, se) = mean_and_std_err(bucket);
            assert!(
                (mean - env.mean(a)).abs() <= 3.0 * se,
                "arm {a}: mean = {mean}, R = {}, se = {se}",
                env.mean(a)
            );
        }
    }
}
