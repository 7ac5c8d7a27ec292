//! The five verifiable reward components and their weighted combination for
//! one completion against one gold sample: entity count, span, type,
//! grounding and entailment.
//!
//! The four matched-pair rewards average over the matched set; when nothing
//! matched they are 1 only for an empty prediction against an empty gold
//! list and 0 otherwise.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matching::{match_entities, Matching};
use crate::model::{iou_or_zero, EntityTriple, GmnerSample, Location, DEFAULT_IOU_THRESHOLD};
use crate::parse::{parse_completion, ReasoningStyle};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RewardConfigError {
    #[error("sigma must lie in [0, 1), got {0}")]
    BadSigma(f64),
    #[error("reward weight {name} must be finite and non-negative, got {value}")]
    BadWeight { name: &'static str, value: f64 },
    #[error("format_penalty must be finite and non-negative, got {0}")]
    BadFormatPenalty(f64),
}

/// Weights for the five reward components, the grounding IoU threshold, and
/// the reward handed to completions that fail the format gate. Defaults:
/// uniform weights of 0.2, sigma 0.5, format penalty 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    #[serde(default = "default_lambda")]
    pub lambda_count: f64,
    #[serde(default = "default_lambda")]
    pub lambda_span: f64,
    #[serde(default = "default_lambda")]
    pub lambda_type: f64,
    #[serde(default = "default_lambda")]
    pub lambda_ground: f64,
    #[serde(default = "default_lambda")]
    pub lambda_entail: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub format_penalty: f64,
}

fn default_lambda() -> f64 {
    0.2
}

fn default_sigma() -> f64 {
    DEFAULT_IOU_THRESHOLD
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            lambda_count: default_lambda(),
            lambda_span: default_lambda(),
            lambda_type: default_lambda(),
            lambda_ground: default_lambda(),
            lambda_entail: default_lambda(),
            sigma: default_sigma(),
            format_penalty: 0.0,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), RewardConfigError> {
        if !(0.0..1.0).contains(&self.sigma) {
            return Err(RewardConfigError::BadSigma(self.sigma));
        }
        for (name, value) in [
            ("lambda_count", self.lambda_count),
            ("lambda_span", self.lambda_span),
            ("lambda_type", self.lambda_type),
            ("lambda_ground", self.lambda_ground),
            ("lambda_entail", self.lambda_entail),
        ] {
            if !value.is_finite() || value < 0.0 {
                return Err(RewardConfigError::BadWeight { name, value });
            }
        }
        if !self.format_penalty.is_finite() || self.format_penalty < 0.0 {
            return Err(RewardConfigError::BadFormatPenalty(self.format_penalty));
        }
        Ok(())
    }
}

/// The component rewards, their weighted total, and the counts that went
/// into them, for one completion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_count: f64,
    pub r_span: f64,
    pub r_type: f64,
    pub r_ground: f64,
    pub r_entail: f64,
    pub total: f64,
    /// Matched-pair count.
    pub k: usize,
    /// Predicted entity count.
    pub p: usize,
    /// Gold entity count.
    pub q: usize,
    pub format_ok: bool,
}

/// Entity count reward: 1 for an exact count, a scaled penalty for over- or
/// under-prediction with harsher slopes when the reference side is small,
/// and 0 for predicting against an empty gold set (or recalling nothing).
pub fn count_reward(p: usize, q: usize) -> f64 {
    if p == q {
        return 1.0;
    }
    if p > q && q > 0 {
        let w_over = match q {
            1..=2 => 0.4,
            3..=4 => 0.2,
            _ => 0.1,
        };
        return (1.0 - (p - q) as f64 * w_over).max(0.0);
    }
    if p > 0 && p < q {
        let w_under = match p {
            1..=2 => 0.5,
            3..=4 => 0.3,
            _ => 0.2,
        };
        return (1.0 - (q - p) as f64 * w_under).max(0.0);
    }
    0.0
}

/// Average score when both lists are empty (a vacuously perfect prediction)
/// or nothing matched.
fn degenerate_pair_reward(matching: &Matching) -> f64 {
    if matching.pred_count() == 0 && matching.gold_count() == 0 {
        1.0
    } else {
        0.0
    }
}

/// Span reward: mean token-level F1 over the matched pairs.
pub fn span_reward(matching: &Matching) -> f64 {
    if matching.k() == 0 {
        return degenerate_pair_reward(matching);
    }
    matching.total_f1() / matching.k() as f64
}

/// Type reward: fraction of matched pairs whose predicted type equals the
/// gold type.
pub fn type_reward(matching: &Matching, preds: &[EntityTriple], golds: &[EntityTriple]) -> f64 {
    if matching.k() == 0 {
        return degenerate_pair_reward(matching);
    }
    let hits = matching
        .pairs
        .iter()
        .filter(|pair| preds[pair.pred].etype == golds[pair.gold].etype)
        .count();
    hits as f64 / matching.k() as f64
}

/// Grounding reward: per matched pair with boxes on both sides, the IoU is
/// thresholded at `sigma` and mapped linearly onto [0, 1]. A pair agreeing
/// that the entity is ungrounded (both locations absent) has nothing to
/// localize and scores 1; a pair disagreeing on visibility scores 0. The
/// average runs over all matched pairs.
pub fn grounding_reward(
    matching: &Matching,
    preds: &[EntityTriple],
    golds: &[EntityTriple],
    sigma: f64,
) -> f64 {
    debug_assert!(sigma < 1.0, "sigma must be below 1");
    if matching.k() == 0 {
        return degenerate_pair_reward(matching);
    }
    let sum: f64 = matching
        .pairs
        .iter()
        .map(
            |pair| match (&preds[pair.pred].loc, &golds[pair.gold].loc) {
                (Location::Box(pb), Location::Box(gb)) => {
                    ((iou_or_zero(pb, gb) - sigma) / (1.0 - sigma)).max(0.0)
                }
                (Location::Absent, Location::Absent) => 1.0,
                _ => 0.0,
            },
        )
        .sum();
    sum / matching.k() as f64
}

/// Entailment reward: fraction of matched pairs agreeing on visibility,
/// i.e. both locations absent or both present.
pub fn entailment_reward(
    matching: &Matching,
    preds: &[EntityTriple],
    golds: &[EntityTriple],
) -> f64 {
    if matching.k() == 0 {
        return degenerate_pair_reward(matching);
    }
    let hits = matching
        .pairs
        .iter()
        .filter(|pair| preds[pair.pred].loc.is_box() == golds[pair.gold].loc.is_box())
        .count();
    hits as f64 / matching.k() as f64
}

/// Weighted combination of the five components.
pub fn total_reward(
    r_count: f64,
    r_span: f64,
    r_type: f64,
    r_ground: f64,
    r_entail: f64,
    config: &RewardConfig,
) -> f64 {
    config.lambda_count * r_count
        + config.lambda_span * r_span
        + config.lambda_type * r_type
        + config.lambda_ground * r_ground
        + config.lambda_entail * r_entail
}

/// Score already-extracted prediction triples against a sample's gold list.
pub fn score_triples(
    preds: &[EntityTriple],
    sample: &GmnerSample,
    config: &RewardConfig,
) -> RewardBreakdown {
    let golds = &sample.gold;
    let matching = match_entities(preds, golds);
    let r_count = count_reward(preds.len(), golds.len());
    let r_span = span_reward(&matching);
    let r_type = type_reward(&matching, preds, golds);
    let r_ground = grounding_reward(&matching, preds, golds, config.sigma);
    let r_entail = entailment_reward(&matching, preds, golds);
    RewardBreakdown {
        r_count,
        r_span,
        r_type,
        r_ground,
        r_entail,
        total: total_reward(r_count, r_span, r_type, r_ground, r_entail, config),
        k: matching.k(),
        p: preds.len(),
        q: golds.len(),
        format_ok: true,
    }
}

/// Parse a raw completion and score it against the sample. A completion
/// that fails the format gate earns `format_penalty` with zeroed
/// components. Total over any input text.
pub fn score_completion(
    completion: &str,
    style: ReasoningStyle,
    sample: &GmnerSample,
    config: &RewardConfig,
) -> RewardBreakdown {
    let parsed = parse_completion(completion, style);
    if !parsed.format_ok {
        return RewardBreakdown {
            r_count: 0.0,
            r_span: 0.0,
            r_type: 0.0,
            r_ground: 0.0,
            r_entail: 0.0,
            total: config.format_penalty,
            k: 0,
            p: parsed.answer.len(),
            q: sample.gold.len(),
            format_ok: false,
        };
    }
    score_triples(&parsed.answer, sample, config)
}
