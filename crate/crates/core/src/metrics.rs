//! Corpus-level evaluation: precision/recall/F1 for the three task modes,
//! visual-grounding accuracy on no-target and one-target samples, and the
//! two modality-bias metric families.
//!
//! Counting is micro-aggregated: per-sample correct/predicted/gold counts
//! are summed over the corpus and the ratios computed from the totals.
//! Within a sample, a gold triple may certify at most one predicted triple
//! and vice versa; the certified count is the maximum one-to-one matching
//! under the mode's correctness predicate, resolved deterministically in
//! first-listed order.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    entity_matches, iou_or_zero, triple_correct, EntityTriple, GmnerSample, TaskMode,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("predictions and samples are misaligned: {0}")]
    MisalignedCorpus(String),
}

/// The prediction triples for one sample, keyed by the sample id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePrediction {
    pub sample_id: String,
    pub triples: Vec<EntityTriple>,
}

/// Micro-averaged precision/recall/F1 with the raw counts that produced
/// them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub correct: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl Prf {
    pub fn from_counts(correct: usize, predicted: usize, gold: usize) -> Prf {
        let precision = ratio(correct, predicted);
        let recall = ratio(correct, gold);
        let f1 = harmonic(precision, recall);
        Prf {
            precision,
            recall,
            f1,
            correct,
            predicted,
            gold,
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Modality-bias report: N-Pre/N-Rec/N-F1 quantify textual bias over
/// triples whose gold location is absent; N-Count/N-Rate quantify visual
/// bias as recalled entities missing from the input sentence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub n_pre: f64,
    pub n_rec: f64,
    pub n_f1: f64,
    pub n_correct: usize,
    pub n_predict: usize,
    pub n_gold: usize,
    pub n_count: usize,
    pub n_rate: f64,
    /// Total recalled (predicted) entities across the corpus.
    pub total_recalled: usize,
}

/// Visual-grounding block of the report. The accuracies are absent (null in
/// JSON) when the corpus holds no qualifying samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VgReport {
    pub n_acc: Option<f64>,
    pub precision: Option<f64>,
    pub no_target_samples: usize,
    pub one_target_samples: usize,
}

/// The full evaluation report emitted by the `eval` pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mode: TaskMode,
    pub iou_threshold: f64,
    pub gmner: Prf,
    pub mner: Prf,
    pub eeg: Prf,
    pub vg: VgReport,
    pub bias: BiasReport,
}

impl MetricsReport {
    /// Evaluate everything at once over an aligned corpus. `mode` only
    /// marks which block the caller considers primary; all three are
    /// always computed.
    pub fn compute(
        preds: &[SamplePrediction],
        samples: &[GmnerSample],
        mode: TaskMode,
        iou_threshold: f64,
    ) -> Result<MetricsReport, MetricsError> {
        Ok(MetricsReport {
            mode,
            iou_threshold,
            gmner: evaluate_corpus(preds, samples, TaskMode::Gmner, iou_threshold)?,
            mner: evaluate_corpus(preds, samples, TaskMode::Mner, iou_threshold)?,
            eeg: evaluate_corpus(preds, samples, TaskMode::Eeg, iou_threshold)?,
            vg: VgReport {
                n_acc: no_target_accuracy(preds, samples)?,
                precision: vg_precision(preds, samples, iou_threshold)?,
                no_target_samples: count_vg_samples(preds, samples, false)?,
                one_target_samples: count_vg_samples(preds, samples, true)?,
            },
            bias: bias_report(preds, samples)?,
        })
    }
}

/// Pair predictions with samples by id. Every sample needs exactly one
/// prediction record and every prediction a sample; offenders are listed in
/// the error.
fn align<'a>(
    preds: &'a [SamplePrediction],
    samples: &'a [GmnerSample],
) -> Result<Vec<(&'a [EntityTriple], &'a GmnerSample)>, MetricsError> {
    let mut by_id = std::collections::HashMap::new();
    let mut duplicates = Vec::new();
    for p in preds {
        if by_id.insert(p.sample_id.as_str(), p).is_some() {
            duplicates.push(p.sample_id.clone());
        }
    }
    let mut missing = Vec::new();
    let mut pairs = Vec::with_capacity(samples.len());
    let mut seen = std::collections::HashSet::new();
    for s in samples {
        if !seen.insert(s.id.as_str()) {
            duplicates.push(s.id.clone());
            continue;
        }
        match by_id.remove(s.id.as_str()) {
            Some(p) => pairs.push((p.triples.as_slice(), s)),
            None => missing.push(s.id.clone()),
        }
    }
    let mut unknown: Vec<String> = by_id.keys().map(|k| k.to_string()).collect();
    unknown.sort();
    missing.sort();
    duplicates.sort();
    if !missing.is_empty() || !unknown.is_empty() || !duplicates.is_empty() {
        let mut parts = Vec::new();
        if !missing.is_empty() {
            parts.push(format!("samples without predictions: {missing:?}"));
        }
        if !unknown.is_empty() {
            parts.push(format!("predictions without samples: {unknown:?}"));
        }
        if !duplicates.is_empty() {
            parts.push(format!("duplicated ids: {duplicates:?}"));
        }
        return Err(MetricsError::MisalignedCorpus(parts.join("; ")));
    }
    Ok(pairs)
}

/// Size of the maximum one-to-one matching over the boolean relation
/// `correct(pred, gold)`, via augmenting paths in first-listed order.
fn max_one_to_one(n_pred: usize, n_gold: usize, correct: impl Fn(usize, usize) -> bool) -> usize {
    let adjacency: Vec<Vec<usize>> = (0..n_pred)
        .map(|i| (0..n_gold).filter(|&j| correct(i, j)).collect())
        .collect();
    let mut gold_owner: Vec<Option<usize>> = vec![None; n_gold];
    let mut matched = 0;
    for pred in 0..n_pred {
        let mut visited = vec![false; n_gold];
        if augment(pred, &adjacency, &mut visited, &mut gold_owner) {
            matched += 1;
        }
    }
    matched
}

fn augment(
    pred: usize,
    adjacency: &[Vec<usize>],
    visited: &mut [bool],
    gold_owner: &mut [Option<usize>],
) -> bool {
    for &g in &adjacency[pred] {
        if visited[g] {
            continue;
        }
        visited[g] = true;
        let free = match gold_owner[g] {
            None => true,
            Some(owner) => augment(owner, adjacency, visited, gold_owner),
        };
        if free {
            gold_owner[g] = Some(pred);
            return true;
        }
    }
    false
}

/// Micro-averaged corpus precision/recall/F1 under the given mode.
pub fn evaluate_corpus(
    preds: &[SamplePrediction],
    samples: &[GmnerSample],
    mode: TaskMode,
    iou_threshold: f64,
) -> Result<Prf, MetricsError> {
    let pairs = align(preds, samples)?;
    let mut correct = 0;
    let mut predicted = 0;
    let mut gold = 0;
    for (p, s) in pairs {
        predicted += p.len();
        gold += s.gold.len();
        correct += max_one_to_one(p.len(), s.gold.len(), |i, j| {
            triple_correct(&p[i], &s.gold[j], mode, iou_threshold)
        });
    }
    Ok(Prf::from_counts(correct, predicted, gold))
}

fn gold_boxes(sample: &GmnerSample) -> usize {
    sample.gold.iter().filter(|t| t.loc.is_box()).count()
}

/// The box a prediction claims for a VG sample: the first predicted triple
/// carrying one, if any.
fn predicted_box(triples: &[EntityTriple]) -> Option<&crate::model::BBox> {
    triples.iter().find_map(|t| t.loc.as_box())
}

fn count_vg_samples(
    preds: &[SamplePrediction],
    samples: &[GmnerSample],
    one_target: bool,
) -> Result<usize, MetricsError> {
    let pairs = align(preds, samples)?;
    let want = usize::from(one_target);
    Ok(pairs.iter().filter(|(_, s)| gold_boxes(s) == want).count())
}

/// Accuracy on no-target samples (no gold region): a true positive is a
/// prediction that also claims no region. Absent when the corpus has no
/// no-target samples.
pub fn no_target_accuracy(
    preds: &[SamplePrediction],
    samples: &[GmnerSample],
) -> Result<Option<f64>, MetricsError> {
    let pairs = align(preds, samples)?;
    let mut tp = 0usize;
    let mut total = 0usize;
    for (p, s) in pairs {
        if gold_boxes(s) == 0 {
            total += 1;
            if predicted_box(p).is_none() {
                tp += 1;
            }
        }
    }
    Ok((total > 0).then(|| tp as f64 / total as f64))
}

/// Localization precision on one-target samples: the fraction whose
/// predicted box exists and reaches the IoU threshold against the single
/// gold box. Absent when the corpus has no one-target samples.
pub fn vg_precision(
    preds: &[SamplePrediction],
    samples: &[GmnerSample],
    iou_threshold: f64,
) -> Result<Option<f64>, MetricsError> {
    let pairs = align(preds, samples)?;
    let mut hit = 0usize;
    let mut total = 0usize;
    for (p, s) in pairs {
        if gold_boxes(s) != 1 {
            continue;
        }
        total += 1;
        let gold_box = s.gold.iter().find_map(|t| t.loc.as_box()).unwrap();
        if let Some(pred_box) = predicted_box(p) {
            if iou_or_zero(pred_box, gold_box) >= iou_threshold {
                hit += 1;
            }
        }
    }
    Ok((total > 0).then(|| hit as f64 / total as f64))
}

/// Textual-bias precision/recall/F1 over triples whose location is absent:
/// a no-target prediction is correct when its entity text exactly matches a
/// gold no-target triple (one-to-one within each sample).
pub fn textual_bias_prf(
    preds: &[SamplePrediction],
    samples: &[GmnerSample],
) -> Result<(f64, f64, f64), MetricsError> {
    let (n_correct, n_predict, n_gold) = textual_bias_counts(preds, samples)?;
    let n_pre = ratio(n_correct, n_predict);
    let n_rec = ratio(n_correct, n_gold);
    Ok((n_pre, n_rec, harmonic(n_pre, n_rec)))
}

fn textual_bias_counts(
    preds: &[SamplePrediction],
    samples: &[GmnerSample],
) -> Result<(usize, usize, usize), MetricsError> {
    let pairs = align(preds, samples)?;
    let mut n_correct = 0;
    let mut n_predict = 0;
    let mut n_gold = 0;
    for (p, s) in pairs {
        let pred_absent: Vec<&EntityTriple> = p.iter().filter(|t| !t.loc.is_box()).collect();
        let gold_absent: Vec<&EntityTriple> = s.gold.iter().filter(|t| !t.loc.is_box()).collect();
        n_predict += pred_absent.len();
        n_gold += gold_absent.len();
        n_correct += max_one_to_one(pred_absent.len(), gold_absent.len(), |i, j| {
            entity_matches(&pred_absent[i].entity, &gold_absent[j].entity)
        });
    }
    Ok((n_correct, n_predict, n_gold))
}

/// Whether a predicted entity occurs in the sentence: case-insensitive
/// substring containment after collapsing whitespace on both sides.
fn entity_in_sentence(entity: &str, sentence: &str) -> bool {
    let e = crate::model::normalize_entity(entity).to_lowercase();
    let s = crate::model::normalize_entity(sentence).to_lowercase();
    !e.is_empty() && s.contains(&e)
}

/// Visual-bias statistics: the number of recalled entities absent from
/// their sample's sentence, and that count as a fraction of all recalled
/// entities.
pub fn visual_bias_stats(
    preds: &[SamplePrediction],
    samples: &[GmnerSample],
) -> Result<(usize, f64), MetricsError> {
    let pairs = align(preds, samples)?;
    let mut absent = 0usize;
    let mut total = 0usize;
    for (p, s) in pairs {
        total += p.len();
        absent += p
            .iter()
            .filter(|t| !entity_in_sentence(&t.entity, &s.sentence))
            .count();
    }
    let rate = if total == 0 {
        0.0
    } else {
        absent as f64 / total as f64
    };
    Ok((absent, rate))
}

/// Both bias families gathered into one report.
pub fn bias_report(
    preds: &[SamplePrediction],
    samples: &[GmnerSample],
) -> Result<BiasReport, MetricsError> {
    let (n_correct, n_predict, n_gold) = textual_bias_counts(preds, samples)?;
    let n_pre = ratio(n_correct, n_predict);
    let n_rec = ratio(n_correct, n_gold);
    let (n_count, n_rate) = visual_bias_stats(preds, samples)?;
    let total_recalled = preds.iter().map(|p| p.triples.len()).sum();
    Ok(BiasReport {
        n_pre,
        n_rec,
        n_f1: harmonic(n_pre, n_rec),
        n_correct,
        n_predict,
        n_gold,
        n_count,
        n_rate,
        total_recalled,
    })
}
