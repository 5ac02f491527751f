//! Finite probability distributions and the numeric primitives built on them:
//! KL divergence, Gibbs (softmax) distributions and uniform smoothing.
//!
//! Construction is strict: weights must be nonnegative and sum to 1 within
//! [`SUM_TOLERANCE`]. Inputs further off are rejected rather than silently
//! renormalized, so estimator bugs surface at the boundary where they happen.

use rand::Rng;

use crate::error::{Error, Result};

/// Absolute tolerance on `sum(weights) - 1` accepted at construction.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// A probability vector over `K >= 1` outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexDistribution {
    weights: Vec<f64>,
}

impl SimplexDistribution {
    /// Validate and wrap a weight vector.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::domain("distribution needs at least one outcome"));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::domain("distribution weights must be finite"));
        }
        if let Some(w) = weights.iter().find(|w| **w < 0.0) {
            return Err(Error::domain(format!("negative weight {w}")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::domain(format!(
                "weights sum to {sum}, off by more than {SUM_TOLERANCE}"
            )));
        }
        Ok(Self { weights })
    }

    /// Uniform distribution over `k` outcomes.
    pub fn uniform(k: usize) -> Self {
        assert!(k >= 1, "uniform distribution needs k >= 1");
        Self {
            weights: vec![1.0 / k as f64; k],
        }
    }

    /// Point mass on `index` among `k` outcomes.
    pub fn point_mass(k: usize, index: usize) -> Self {
        assert!(index < k, "point mass index out of range");
        let mut weights = vec![0.0; k];
        weights[index] = 1.0;
        Self { weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Probability of outcome `index`.
    pub fn prob(&self, index: usize) -> f64 {
        self.weights[index]
    }

    pub fn min_weight(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Expectation of `values` under this distribution.
    pub fn expectation(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.len() {
            return Err(Error::DimensionMismatch {
                left: self.len(),
                right: values.len(),
            });
        }
        Ok(self
            .weights
            .iter()
            .zip(values)
            .map(|(w, v)| w * v)
            .sum())
    }
}

/// Scores and temperature defining a Gibbs distribution
/// `w(a) ∝ exp(temperature * score(a))`.
#[derive(Debug, Clone)]
pub struct GibbsScores {
    scores: Vec<f64>,
    temperature: f64,
}

impl GibbsScores {
    pub fn new(scores: Vec<f64>, temperature: f64) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::domain("gibbs needs at least one score"));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::domain("gibbs scores must be finite"));
        }
        if !temperature.is_finite() || temperature < 0.0 {
            return Err(Error::domain(format!(
                "gibbs temperature must be finite and >= 0, got {temperature}"
            )));
        }
        Ok(Self {
            scores,
            temperature,
        })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }
}

/// KL divergence `Σ_a p(a) ln(p(a)/q(a))` with the conventions
/// `0·ln(0/q) = 0` and `KL = +∞` when `p` puts mass outside the support of `q`.
pub fn kl_divergence(p: &SimplexDistribution, q: &SimplexDistribution) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    let mut kl = 0.0;
    for (&pa, &qa) in p.weights().iter().zip(q.weights()) {
        if pa == 0.0 {
            continue;
        }
        if qa == 0.0 {
            return Ok(f64::INFINITY);
        }
        kl += pa * (pa / qa).ln();
    }
    // Exact KL is nonnegative; rounding in the sum may leave a tiny negative.
    Ok(kl.max(0.0))
}

/// Gibbs distribution `w(a) ∝ exp(temperature * score(a))`, computed with the
/// max-shift so arbitrarily large finite scores cannot overflow.
pub fn gibbs(s: &GibbsScores) -> Result<SimplexDistribution> {
    let max = s
        .scores
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let mut weights: Vec<f64> = s
        .scores
        .iter()
        .map(|&x| (s.temperature * (x - max)).exp())
        .collect();
    // The max-shifted exponent is <= 0, so the sum lies in [1, K].
    let z: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= z;
    }
    SimplexDistribution::new(weights)
}

/// Mix `rho` with the uniform distribution:
/// `out(a) = (1 - K·eps)·rho(a) + eps`, so every outcome keeps mass >= eps.
///
/// `eps` must lie in `[0, 1/K]`. The upper boundary is accepted with a 1e-9
/// relative tolerance (schedule values like `K^(-2/3)·K^(-1/3)` land within an
/// ulp of `1/K`) and clamped back onto it.
pub fn mix_with_uniform(rho: &SimplexDistribution, eps: f64) -> Result<SimplexDistribution> {
    let k = rho.len() as f64;
    let cap = 1.0 / k;
    if !eps.is_finite() || eps < 0.0 || eps > cap * (1.0 + 1e-9) {
        return Err(Error::domain(format!(
            "smoothing level {eps} outside [0, 1/K] for K = {}",
            rho.len()
        )));
    }
    let eps = eps.min(cap);
    let coef = (1.0 - k * eps).max(0.0);
    let weights = rho.weights().iter().map(|&w| coef * w + eps).collect();
    SimplexDistribution::new(weights)
}

/// Draw an outcome index from `d` by inverse CDF.
pub fn sample<R: Rng + ?Sized>(d: &SimplexDistribution, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &w) in d.weights().iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    // Rounding can leave acc marginally below 1; the draw belongs to the tail.
    d.len() - 1
}
