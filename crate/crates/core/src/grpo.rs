//! Group-relative advantage normalization, reward-statistics filtering of
//! sampled groups, and the clipped surrogate objective value computed from
//! supplied per-token probability ratios.
//!
//! Everything here is pure math over one group of rewards; no policies,
//! gradients or sampling. Statistics use the population (divide-by-G)
//! convention since a group is the whole set of sampled responses.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GrpoError {
    #[error("a reward group needs at least one reward")]
    EmptyGroup,
    #[error("reward at index {0} is not finite")]
    NonFiniteReward(usize),
    #[error("ratio list must be non-empty")]
    EmptyRatios,
    #[error("ratio at index {index} must be positive and finite, got {value}")]
    BadRatio { index: usize, value: f64 },
    #[error("clip thresholds must satisfy 0 < eps_low < 1 and 0 < eps_high, got ({eps_low}, {eps_high})")]
    BadClip { eps_low: f64, eps_high: f64 },
    #[error("filter thresholds need median_low <= median_high, got ({low}, {high})")]
    BadMedianBand { low: f64, high: f64 },
}

/// Rewards of the G responses sampled for one query.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardGroup {
    rewards: Vec<f64>,
}

impl RewardGroup {
    pub fn new(rewards: Vec<f64>) -> Result<Self, GrpoError> {
        if rewards.is_empty() {
            return Err(GrpoError::EmptyGroup);
        }
        if let Some(i) = rewards.iter().position(|r| !r.is_finite()) {
            return Err(GrpoError::NonFiniteReward(i));
        }
        Ok(Self { rewards })
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        false // G >= 1 by construction
    }
}

/// Summary statistics of one reward group: mean, population standard
/// deviation, maximum, and median (midpoint of the two central order
/// statistics for even G).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub mean: f64,
    pub std: f64,
    pub max: f64,
    pub median: f64,
}

/// Retention thresholds on group reward statistics. A group is kept when
/// its std, max and median all satisfy the (inclusive) bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterThresholds {
    #[serde(default = "default_min_std")]
    pub min_std: f64,
    #[serde(default = "default_min_max")]
    pub min_max: f64,
    #[serde(default = "default_median_low")]
    pub median_low: f64,
    #[serde(default = "default_median_high")]
    pub median_high: f64,
}

fn default_min_std() -> f64 {
    0.1
}
fn default_min_max() -> f64 {
    0.8
}
fn default_median_low() -> f64 {
    0.08
}
fn default_median_high() -> f64 {
    0.6
}

impl Default for FilterThresholds {
    fn default() -> Self {
        Self {
            min_std: default_min_std(),
            min_max: default_min_max(),
            median_low: default_median_low(),
            median_high: default_median_high(),
        }
    }
}

impl FilterThresholds {
    pub fn validate(&self) -> Result<(), GrpoError> {
        if self.median_low > self.median_high {
            return Err(GrpoError::BadMedianBand {
                low: self.median_low,
                high: self.median_high,
            });
        }
        Ok(())
    }
}

/// Clipping band for the surrogate objective: ratios are clamped into
/// `[1 - eps_low, 1 + eps_high]`. Set both to the same value for a
/// symmetric band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClipConfig {
    #[serde(default = "default_eps_low")]
    pub eps_low: f64,
    #[serde(default = "default_eps_high")]
    pub eps_high: f64,
}

fn default_eps_low() -> f64 {
    0.15
}
fn default_eps_high() -> f64 {
    0.25
}

impl Default for ClipConfig {
    fn default() -> Self {
        Self {
            eps_low: default_eps_low(),
            eps_high: default_eps_high(),
        }
    }
}

impl ClipConfig {
    /// A symmetric band, for the single-threshold reading.
    pub fn symmetric(eps: f64) -> Self {
        Self {
            eps_low: eps,
            eps_high: eps,
        }
    }

    pub fn validate(&self) -> Result<(), GrpoError> {
        if self.eps_low <= 0.0 || self.eps_low >= 1.0 || self.eps_high <= 0.0 {
            return Err(GrpoError::BadClip {
                eps_low: self.eps_low,
                eps_high: self.eps_high,
            });
        }
        Ok(())
    }
}

/// Standardized advantages `(r_i - mean) / std` with population std. A
/// zero-variance group carries no signal and yields all zeros rather than
/// an error.
pub fn group_advantages(group: &RewardGroup) -> Vec<f64> {
    let stats = group_stats(group);
    if stats.std == 0.0 {
        return vec![0.0; group.len()];
    }
    group
        .rewards()
        .iter()
        .map(|r| (r - stats.mean) / stats.std)
        .collect()
}

/// Mean, population standard deviation, max and median of a group.
pub fn group_stats(group: &RewardGroup) -> GroupStats {
    let rewards = group.rewards();
    let g = rewards.len() as f64;
    // std must be exactly 0 for a constant group; summation noise would
    // otherwise leak ulp-sized deviations into the advantages
    let all_equal = rewards.windows(2).all(|w| w[0] == w[1]);
    let mean = if all_equal {
        rewards[0]
    } else {
        rewards.iter().sum::<f64>() / g
    };
    let var = rewards.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / g;
    let std = var.sqrt();
    let max = rewards.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut sorted = rewards.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };

    GroupStats {
        mean,
        std,
        max,
        median,
    }
}

/// Decide whether a group is retained for training: std at least `min_std`,
/// max at least `min_max`, and median inside the band, all inclusive.
pub fn filter_group(group: &RewardGroup, t: &FilterThresholds) -> (bool, GroupStats) {
    let stats = group_stats(group);
    let keep = stats.std >= t.min_std
        && stats.max >= t.min_max
        && stats.median >= t.median_low
        && stats.median <= t.median_high;
    (keep, stats)
}

/// Length-normalized clipped surrogate value: the mean over tokens of
/// `min(ratio * A, clip(ratio, 1 - eps_low, 1 + eps_high) * A)`, with the
/// response-level advantage applied at every token.
pub fn clipped_surrogate(
    ratios: &[f64],
    advantage: f64,
    clip: &ClipConfig,
) -> Result<f64, GrpoError> {
    clip.validate()?;
    if ratios.is_empty() {
        return Err(GrpoError::EmptyRatios);
    }
    let lo = 1.0 - clip.eps_low;
    let hi = 1.0 + clip.eps_high;
    let mut sum = 0.0;
    for (index, &ratio) in ratios.iter().enumerate() {
        if !ratio.is_finite() || ratio <= 0.0 {
            return Err(GrpoError::BadRatio {
                index,
                value: ratio,
            });
        }
        let unclipped = ratio * advantage;
        let clipped = ratio.clamp(lo, hi) * advantage;
        sum += unclipped.min(clipped);
    }
    Ok(sum / ratios.len() as f64)
}
