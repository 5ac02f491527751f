//! Stochastic multiarmed-bandit simulation with built-in verification of the
//! concentration bounds the policy's analysis rests on.
//!
//! The crate has three layers:
//!
//! * primitives: probability vectors over arms ([`simplex`]), reward
//!   environments with closed-form oracle moments ([`mod@env`]), and the
//!   smoothed exponential-weights policy with its `γ_t`/`ε_t` schedules
//!   ([`policy`]);
//! * bound evaluators ([`bounds`]): the PAC-Bayes-Bernstein martingale
//!   inequality, the importance-weighted gap bound, the per-round regret
//!   bound, and the supporting lemmas, each as a pure function of the scalars
//!   it needs;
//! * validators: synthetic martingale families with statistical checks
//!   ([`martingale`]) and a reproducible experiment driver that runs bandit
//!   replicas, evaluates every bound per round, and reports violation rates
//!   ([`harness`]).
//!
//! Every stochastic component draws from counter-derived substreams of a
//! single master seed ([`rng`]), so a `(config, seed)` pair fixes every
//! output byte.

pub mod bounds;
pub mod env;
pub mod error;
pub mod harness;
pub mod martingale;
pub mod policy;
pub mod rng;
pub mod simplex;
pub mod stats;

pub use bounds::{BoundInputs, BoundRow, CertifiedValue, RoundThreshold};
pub use env::{BanditEnvironment, RewardLaw, VarianceLedger};
pub use error::{Error, Result};
pub use harness::{ExperimentConfig, RunSummary, SuiteKind, run};
pub use martingale::{FamilySimulator, MartingaleFamily, PosteriorRule};
pub use policy::{PolicyState, Schedules};
pub use simplex::{GibbsScores, SimplexDistribution};
