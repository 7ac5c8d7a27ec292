//! Scoring and evaluation toolkit for grounded multimodal named entity
//! recognition: verifiable reward functions over tagged completions,
//! group-relative advantage math for GRPO-style training, Hungarian span
//! matching, the full evaluation-metric family, and the JSONL dataset
//! plumbing that ties them together.
//!
//! Everything is pure and deterministic: the same inputs always produce the
//! same scores, reports and splits, so training pipelines and evaluations
//! stay reproducible.
//!
//! ```
//! use gmner_core::{
//!     group_advantages, score_completion, EntityTriple, EntityType, GmnerSample, Location,
//!     ReasoningStyle, RewardConfig, RewardGroup,
//! };
//!
//! let sample = GmnerSample {
//!     id: "t1".into(),
//!     sentence: "Iggy cheers for the Spurs".into(),
//!     image_ref: "t1.jpg".into(),
//!     image_width: 640,
//!     image_height: 480,
//!     gold: vec![
//!         EntityTriple::new("Iggy", EntityType::Person, Location::Absent).unwrap(),
//!     ],
//! };
//!
//! // one sampled completion, scored by the verifiable rewards
//! let completion = "<process>only Iggy is mentioned, and not visible</process>\
//!                   <answer>(Iggy, person, None)</answer>";
//! let reward = score_completion(completion, ReasoningStyle::Formal, &sample, &RewardConfig::default());
//! assert_eq!(reward.total, 1.0);
//!
//! // a group of such rewards standardizes into advantages
//! let group = RewardGroup::new(vec![reward.total, 0.4, 0.1, 0.0]).unwrap();
//! let advantages = group_advantages(&group);
//! assert!(advantages[0] > 0.0 && advantages[3] < 0.0);
//! ```

pub mod grpo;
pub mod io;
pub mod matching;
pub mod metrics;
pub mod model;
pub mod parse;
pub mod prompt;
pub mod reward;

pub use grpo::{
    clipped_surrogate, filter_group, group_advantages, group_stats, ClipConfig, FilterThresholds,
    GroupStats, GrpoError, RewardGroup,
};
pub use io::{
    filter_grec_multitarget, load_completion_groups, load_predictions, load_reward_groups,
    load_samples, load_schema_records, split_schema_dataset, write_jsonl, CompletionGroup,
    DatasetError, LoadedSamples, PredictionRecord, RewardGroupRecord, SchemaRecord,
};
pub use matching::{
    longest_contiguous_overlap, match_entities, token_f1, tokenize, MatchedPair, Matching, TokenF1,
};
pub use metrics::{
    bias_report, evaluate_corpus, no_target_accuracy, textual_bias_prf, vg_precision,
    visual_bias_stats, BiasReport, MetricsError, MetricsReport, Prf, SamplePrediction, VgReport,
};
pub use model::{
    entity_matches, iou, iou_or_zero, normalize_entity, triple_correct, BBox, EntityTriple,
    EntityType, GmnerSample, Location, ModelError, TaskMode, DEFAULT_IOU_THRESHOLD,
};
pub use parse::{parse_completion, serialize_answer, ParsedCompletion, ReasoningStyle, Visibility};
pub use prompt::{render_prompt, PromptSpec, Shot, TemplateId};
pub use reward::{
    count_reward, entailment_reward, grounding_reward, score_completion, score_triples,
    span_reward, total_reward, type_reward, RewardBreakdown, RewardConfig, RewardConfigError,
};
