//! Reward and verification engine for tool-calling language models.
//!
//! A model response flows through the stages in order:
//! [`ir`] parses the tool-call block into a canonical sequence, [`verify`]
//! checks it against the [`schema`] registry, [`exec`] runs it on a
//! deterministic backend, and [`reward`] turns the three outcomes into a
//! decomposed reward. [`rl`] holds the advantage and loss numerics the
//! reward feeds, and [`bench`] scores whole datasets by composition depth.
//!
//! Numeric code is generic over [`scalar::Real`] (RL math) and
//! [`scalar::Weight`] (rewards, which also admit exact rationals); the
//! aliases below fix the usual choices.

pub mod bench;
pub mod exec;
pub mod ir;
pub mod reward;
pub mod rl;
pub mod scalar;
pub mod schema;
pub mod verify;

pub use num_rational::Ratio;

/// Exact rational used for bit-exact reward checks.
pub type Exact = Ratio<i64>;

pub type Config = reward::RewardConfig<f64>;
pub type ExactConfig = reward::RewardConfig<Exact>;
pub type Breakdown = reward::RewardBreakdown<f64>;
pub type ExactBreakdown = reward::RewardBreakdown<Exact>;
pub type Scored = bench::ScoredResponse<f64>;
pub type ItemResult = bench::ItemResult<f64>;

pub type RolloutGroup = rl::RolloutGroup<f64>;
pub type TokenLogProbs = rl::TokenLogProbs<f64>;
pub type AdvantageResult = rl::AdvantageResult<f64>;
pub type LossReport = rl::LossReport<f64>;
pub type Curve = rl::Curve<f64>;
