//! Group-normalised advantages, the token-level clipped surrogate, the k3 KL
//! penalty, and the smoothing used for reward curves.
//!
//! Everything here works on supplied log-probabilities; no policy is evaluated.
//! Sums run left to right over the given order.

use serde::Serialize;

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RlError {
    #[error("group needs at least 2 rewards, got {0}")]
    GroupTooSmall(usize),
    #[error("reward {value} at index {index} is outside [0, 1]")]
    RewardOutOfRange { index: usize, value: f64 },
    #[error("log-prob sequences differ in length (current {current}, old {old}, reference {reference})")]
    LengthMismatch { current: usize, old: usize, reference: usize },
    #[error("log-prob sequences must hold at least one token")]
    EmptyTokens,
    #[error("log-prob {value} at token {index} is not a finite value <= 0")]
    InvalidLogProb { index: usize, value: f64 },
    #[error("batch is empty")]
    EmptyBatch,
    #[error("series is empty")]
    EmptySeries,
    #[error("alpha must lie in (0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("window must be positive")]
    ZeroWindow,
}

fn f<T: Real>(v: T) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Rewards of the K trajectories sampled for one prompt.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RolloutGroup<T: Real> {
    pub prompt_id: String,
    pub rewards: Vec<T>,
}

impl<T: Real> RolloutGroup<T> {
    pub fn new(prompt_id: impl Into<String>, rewards: Vec<T>) -> Result<Self, RlError> {
        if rewards.len() < 2 {
            return Err(RlError::GroupTooSmall(rewards.len()));
        }
        if let Some((index, v)) = rewards
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v >= T::zero() && **v <= T::one()))
        {
            return Err(RlError::RewardOutOfRange { index, value: f(*v) });
        }
        Ok(RolloutGroup {
            prompt_id: prompt_id.into(),
            rewards,
        })
    }

    pub fn advantages(&self, epsilon: T) -> AdvantageResult<T> {
        group_advantages(&self.rewards, epsilon).expect("group size checked on construction")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdvantageResult<T: Real> {
    pub advantages: Vec<T>,
    pub group_mean: T,
    /// Population standard deviation.
    pub group_std: T,
    pub epsilon: T,
}

/// Default ε added to the group std.
pub fn default_epsilon<T: Real>() -> T {
    T::lit(1e-4)
}

pub fn mean<T: Real>(xs: &[T]) -> T {
    xs.iter().copied().sum::<T>() / T::from_usize(xs.len()).expect("length fits")
}

pub fn population_std<T: Real>(xs: &[T]) -> T {
    let mu = mean(xs);
    let var = xs.iter().map(|&x| (x - mu) * (x - mu)).sum::<T>() / T::from_usize(xs.len()).expect("length fits");
    var.sqrt()
}

/// `A_i = (R_i − μ) / (σ + ε)` with population σ. A constant group yields
/// exact zeros, whatever ε is.
pub fn group_advantages<T: Real>(rewards: &[T], epsilon: T) -> Result<AdvantageResult<T>, RlError> {
    if rewards.len() < 2 {
        return Err(RlError::GroupTooSmall(rewards.len()));
    }
    let mu = mean(rewards);
    let sigma = population_std(rewards);
    let advantages = if rewards.iter().all(|&r| r == rewards[0]) {
        vec![T::zero(); rewards.len()]
    } else {
        rewards.iter().map(|&r| (r - mu) / (sigma + epsilon)).collect()
    };
    Ok(AdvantageResult {
        advantages,
        group_mean: mu,
        group_std: sigma,
        epsilon,
    })
}

/// Per-token log-probabilities of one trajectory under the current, behaviour
/// and reference policies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TokenLogProbs<T: Real> {
    current: Vec<T>,
    old: Vec<T>,
    reference: Vec<T>,
}

impl<T: Real> TokenLogProbs<T> {
    pub fn new(current: Vec<T>, old: Vec<T>, reference: Vec<T>) -> Result<Self, RlError> {
        if current.len() != old.len() || current.len() != reference.len() {
            return Err(RlError::LengthMismatch {
                current: current.len(),
                old: old.len(),
                reference: reference.len(),
            });
        }
        if current.is_empty() {
            return Err(RlError::EmptyTokens);
        }
        for series in [&current, &old, &reference] {
            if let Some((index, v)) = series
                .iter()
                .enumerate()
                .find(|(_, v)| !(v.is_finite() && **v <= T::zero()))
            {
                return Err(RlError::InvalidLogProb { index, value: f(*v) });
            }
        }
        Ok(TokenLogProbs { current, old, reference })
    }

    /// Single-iteration case: the behaviour policy is the current one.
    pub fn on_policy(current: Vec<T>, reference: Vec<T>) -> Result<Self, RlError> {
        Self::new(current.clone(), current, reference)
    }

    pub fn current(&self) -> &[T] {
        &self.current
    }

    pub fn old(&self) -> &[T] {
        &self.old
    }

    pub fn reference(&self) -> &[T] {
        &self.reference
    }

    pub fn len(&self) -> usize {
        self.current.len()
    }

    pub fn is_empty(&self) -> bool {
        self.current.is_empty()
    }

    /// Importance ratios `exp(current − old)`.
    pub fn ratios(&self) -> impl Iterator<Item = T> + '_ {
        self.current.iter().zip(&self.old).map(|(&c, &o)| (c - o).exp())
    }
}

/// A trajectory's log-probs paired with its (broadcast) advantage.
pub type BatchItem<T> = (TokenLogProbs<T>, T);

fn active_tokens<T: Real>(batch: &[BatchItem<T>]) -> Result<usize, RlError> {
    if batch.is_empty() {
        return Err(RlError::EmptyBatch);
    }
    Ok(batch.iter().map(|(lp, _)| lp.len()).sum())
}

fn clip<T: Real>(x: T, lo: T, hi: T) -> T {
    x.max(lo).min(hi)
}

/// `−Σ_t min(ρ_t A, clip(ρ_t, 1−ε, 1+ε) A) / Σ T_i` over the whole batch.
pub fn clipped_surrogate_loss<T: Real>(batch: &[BatchItem<T>], clip_epsilon: T) -> Result<T, RlError> {
    let n = active_tokens(batch)?;
    let (lo, hi) = (T::one() - clip_epsilon, T::one() + clip_epsilon);
    let mut acc = T::zero();
    for (lp, a) in batch {
        for rho in lp.ratios() {
            acc = acc + (rho * *a).min(clip(rho, lo, hi) * *a);
        }
    }
    Ok(-acc / T::from_usize(n).expect("token count fits"))
}

/// Analytic `∂loss/∂current_t` for every token, trajectory by trajectory.
/// Tokens on the clipped branch contribute no gradient.
pub fn surrogate_token_gradients<T: Real>(batch: &[BatchItem<T>], clip_epsilon: T) -> Result<Vec<Vec<T>>, RlError> {
    let n = T::from_usize(active_tokens(batch)?).expect("token count fits");
    let (lo, hi) = (T::one() - clip_epsilon, T::one() + clip_epsilon);
    Ok(batch
        .iter()
        .map(|(lp, a)| {
            lp.ratios()
                .map(|rho| {
                    // d/d(current) of ρA is ρA; the clipped term is flat once ρ leaves the band.
                    let in_band = rho >= lo && rho <= hi;
                    if in_band || rho * *a < clip(rho, lo, hi) * *a {
                        -(rho * *a) / n
                    } else {
                        T::zero()
                    }
                })
                .collect()
        })
        .collect())
}

/// k3 estimator `exp(d) − d − 1` with `d = reference − current`.
pub fn k3_kl<T: Real>(current: T, reference: T) -> T {
    let d = reference - current;
    d.exp() - d - T::one()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossReport<T: Real> {
    pub pg_loss: T,
    /// `λ_KL / Σ T_i · Σ_t k3_t`.
    pub kl_penalty: T,
    pub total_loss: T,
    pub active_token_count: usize,
    pub clip_epsilon: T,
    pub lambda_kl: T,
}

pub fn default_lambda_kl<T: Real>() -> T {
    T::lit(0.04)
}

pub fn total_loss<T: Real>(batch: &[BatchItem<T>], clip_epsilon: T, lambda_kl: T) -> Result<LossReport<T>, RlError> {
    let n = active_tokens(batch)?;
    let pg_loss = clipped_surrogate_loss(batch, clip_epsilon)?;
    let mut kl_sum = T::zero();
    for (lp, _) in batch {
        for (&c, &r) in lp.current.iter().zip(&lp.reference) {
            kl_sum = kl_sum + k3_kl(c, r);
        }
    }
    let kl_penalty = lambda_kl / T::from_usize(n).expect("token count fits") * kl_sum;
    Ok(LossReport {
        pg_loss,
        kl_penalty,
        total_loss: pg_loss + kl_penalty,
        active_token_count: n,
        clip_epsilon,
        lambda_kl,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curve<T: Real> {
    pub smoothed: Vec<T>,
    pub rolling_std: Vec<T>,
}

/// EWMA seeded with the first value, plus the population std over the
/// trailing `min(window, t + 1)` raw values.
pub fn ewma_curve<T: Real>(series: &[T], alpha: T, window: usize) -> Result<Curve<T>, RlError> {
    if series.is_empty() {
        return Err(RlError::EmptySeries);
    }
    if !(alpha > T::zero() && alpha <= T::one()) {
        return Err(RlError::InvalidAlpha(f(alpha)));
    }
    if window == 0 {
        return Err(RlError::ZeroWindow);
    }
    let mut smoothed = Vec::with_capacity(series.len());
    let mut prev = series[0];
    for &x in series {
        prev = if smoothed.is_empty() { x } else { alpha * x + (T::one() - alpha) * prev };
        smoothed.push(prev);
    }
    let rolling_std = (0..series.len())
        .map(|t| population_std(&series[(t + 1).saturating_sub(window)..=t]))
        .collect();
    Ok(Curve { smoothed, rolling_std })
}
