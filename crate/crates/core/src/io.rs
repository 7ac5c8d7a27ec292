//! JSONL ingestion and emission for samples, predictions, completion
//! groups, reward groups and reasoning-schema records, plus the GREC
//! multi-target filter and the deterministic two-way dataset split.
//!
//! Files are UTF-8 with one JSON object per line; bounding boxes are
//! `[x1, y1, x2, y2]` arrays in pixels and `null` encodes an absent
//! location. Writers go through a temporary file and a rename so partial
//! output never lands under the final name.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{GmnerSample, Location};
use crate::parse::ReasoningStyle;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Record {
        path: String,
        line: usize,
        message: String,
    },
    #[error("split fraction must lie strictly between 0 and 1, got {0}")]
    BadFraction(f64),
}

impl DatasetError {
    fn record(path: &Path, line: usize, message: impl Into<String>) -> Self {
        DatasetError::Record {
            path: path.display().to_string(),
            line,
            message: message.into(),
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        DatasetError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// One prediction line: a raw completion, pre-parsed triples, or both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub sample_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completion: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub triples: Option<Vec<crate::model::EntityTriple>>,
}

impl PredictionRecord {
    fn validate(&self) -> Result<(), String> {
        if self.completion.is_none() && self.triples.is_none() {
            return Err("record needs a completion or triples".to_string());
        }
        Ok(())
    }

    /// The triples this record predicts: pre-parsed ones when present,
    /// otherwise whatever the completion's answer block parses to.
    pub fn resolve_triples(&self, style: ReasoningStyle) -> Vec<crate::model::EntityTriple> {
        if let Some(t) = &self.triples {
            return t.clone();
        }
        match &self.completion {
            Some(c) => crate::parse::parse_completion(c, style).answer,
            None => Vec::new(),
        }
    }
}

/// One group of G sampled completions for a single sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionGroup {
    pub sample_id: String,
    pub completions: Vec<String>,
}

/// One group of G rewards, ready for advantage computation or filtering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardGroupRecord {
    pub sample_id: String,
    pub rewards: Vec<f64>,
}

/// One reasoning-schema record: the prompt, the reasoning text produced for
/// it, and the answer triples it leads to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaRecord {
    pub sample_id: String,
    pub style: ReasoningStyle,
    pub prompt: String,
    pub reasoning: String,
    pub answer: Vec<crate::model::EntityTriple>,
}

/// Samples plus the non-fatal warnings ingestion produced (clamped boxes,
/// skipped lines in lenient mode).
#[derive(Debug)]
pub struct LoadedSamples {
    pub samples: Vec<GmnerSample>,
    pub warnings: Vec<String>,
}

/// Read and validate a JSONL sample file. Gold boxes that overshoot the
/// image are clamped to its bounds with a warning; every remaining
/// invariant violation is an error naming the line in strict mode, or a
/// warning-and-skip in lenient mode.
pub fn load_samples(path: &Path, strict: bool) -> Result<LoadedSamples, DatasetError> {
    let mut samples = Vec::new();
    let mut warnings = Vec::new();
    for_each_line(path, |line_no, text| {
        let parsed: Result<GmnerSample, _> = serde_json::from_str(text);
        let mut sample = match parsed {
            Ok(s) => s,
            Err(e) => {
                if strict {
                    return Err(DatasetError::record(path, line_no, e.to_string()));
                }
                warnings.push(format!("{}:{line_no}: skipped: {e}", path.display()));
                return Ok(());
            }
        };
        let mut failure: Option<String> = None;
        for triple in &mut sample.gold {
            if let Location::Box(b) = &triple.loc {
                if b.is_valid() {
                    let clamped = b.clamp_to(sample.image_width, sample.image_height);
                    if clamped == *b {
                        continue;
                    }
                    if clamped.is_valid() {
                        warnings.push(format!(
                            "{}:{line_no}: clamped gold box for {:?} to image bounds",
                            path.display(),
                            triple.entity
                        ));
                        triple.loc = Location::Box(clamped);
                    } else {
                        failure = Some(format!(
                            "gold box ({}, {}, {}, {}) for {:?} lies entirely outside the {}x{} image",
                            b.x1,
                            b.y1,
                            b.x2,
                            b.y2,
                            triple.entity,
                            sample.image_width,
                            sample.image_height
                        ));
                        break;
                    }
                }
            }
        }
        if failure.is_none() {
            failure = sample.validate().err().map(|e| e.to_string());
        }
        if let Some(message) = failure {
            if strict {
                return Err(DatasetError::record(path, line_no, message));
            }
            warnings.push(format!("{}:{line_no}: skipped: {message}", path.display()));
            return Ok(());
        }
        samples.push(sample);
        Ok(())
    })?;
    Ok(LoadedSamples { samples, warnings })
}

/// Read prediction records, requiring each line to carry a completion or
/// triples.
pub fn load_predictions(path: &Path) -> Result<Vec<PredictionRecord>, DatasetError> {
    let mut records: Vec<PredictionRecord> = read_jsonl(path)?;
    for (i, r) in records.iter_mut().enumerate() {
        if let Err(msg) = r.validate() {
            return Err(DatasetError::record(path, i + 1, msg));
        }
    }
    Ok(records)
}

/// Read completion groups, requiring at least one completion per group.
pub fn load_completion_groups(path: &Path) -> Result<Vec<CompletionGroup>, DatasetError> {
    let groups: Vec<CompletionGroup> = read_jsonl(path)?;
    for (i, g) in groups.iter().enumerate() {
        if g.completions.is_empty() {
            return Err(DatasetError::record(
                path,
                i + 1,
                "group has no completions",
            ));
        }
    }
    Ok(groups)
}

pub fn load_schema_records(path: &Path) -> Result<Vec<SchemaRecord>, DatasetError> {
    read_jsonl(path)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum GroupLine {
    Group {
        sample_id: String,
        rewards: Vec<f64>,
    },
    Scored {
        sample_id: String,
        total: f64,
    },
}

/// Read reward groups. A line is either an explicit group
/// (`{"sample_id", "rewards": [...]}`) or a single scored record carrying a
/// `total` (as emitted by the scoring pipeline); consecutive scored lines
/// with the same sample id coalesce into one group.
pub fn load_reward_groups(path: &Path) -> Result<Vec<RewardGroupRecord>, DatasetError> {
    let mut groups: Vec<RewardGroupRecord> = Vec::new();
    let mut open: Option<RewardGroupRecord> = None;
    for_each_line(path, |line_no, text| {
        let line: GroupLine = serde_json::from_str(text)
            .map_err(|e| DatasetError::record(path, line_no, e.to_string()))?;
        match line {
            GroupLine::Group { sample_id, rewards } => {
                if rewards.is_empty() {
                    return Err(DatasetError::record(path, line_no, "group has no rewards"));
                }
                if let Some(g) = open.take() {
                    groups.push(g);
                }
                groups.push(RewardGroupRecord { sample_id, rewards });
            }
            GroupLine::Scored { sample_id, total } => match &mut open {
                Some(g) if g.sample_id == sample_id => g.rewards.push(total),
                _ => {
                    if let Some(g) = open.take() {
                        groups.push(g);
                    }
                    open = Some(RewardGroupRecord {
                        sample_id,
                        rewards: vec![total],
                    });
                }
            },
        }
        Ok(())
    })?;
    if let Some(g) = open.take() {
        groups.push(g);
    }
    Ok(groups)
}

/// Drop GREC samples whose expression maps to two or more gold regions;
/// no-target and one-target samples stay. Returns the kept samples and the
/// dropped count.
pub fn filter_grec_multitarget(samples: Vec<GmnerSample>) -> (Vec<GmnerSample>, usize) {
    let before = samples.len();
    let kept: Vec<GmnerSample> = samples
        .into_iter()
        .filter(|s| s.gold.iter().filter(|t| t.loc.is_box()).count() < 2)
        .collect();
    let dropped = before - kept.len();
    (kept, dropped)
}

/// Deterministically partition schema records into two sets, keyed by
/// sample id so every record of one image-text pair lands on the same side.
/// The assignment hashes (seed, sample_id) and sends a record to the first
/// set when the hash falls below `fraction`.
pub fn split_schema_dataset(
    records: Vec<SchemaRecord>,
    fraction: f64,
    seed: u64,
) -> Result<(Vec<SchemaRecord>, Vec<SchemaRecord>), DatasetError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(DatasetError::BadFraction(fraction));
    }
    let mut d1 = Vec::new();
    let mut d2 = Vec::new();
    for record in records {
        if split_point(seed, &record.sample_id) < fraction {
            d1.push(record);
        } else {
            d2.push(record);
        }
    }
    Ok((d1, d2))
}

/// Map (seed, id) to a uniform point in [0, 1) via SHA-256; stable across
/// platforms and releases.
fn split_point(seed: u64, sample_id: &str) -> f64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(sample_id.as_bytes());
    let digest = hasher.finalize();
    let word = u64::from_be_bytes(digest[..8].try_into().unwrap());
    word as f64 / (u64::MAX as f64 + 1.0)
}

/// Generic JSONL reader with line numbers in every error.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, DatasetError> {
    let mut out = Vec::new();
    for_each_line(path, |line_no, text| {
        let value: T = serde_json::from_str(text)
            .map_err(|e| DatasetError::record(path, line_no, e.to_string()))?;
        out.push(value);
        Ok(())
    })?;
    Ok(out)
}

fn for_each_line(
    path: &Path,
    mut f: impl FnMut(usize, &str) -> Result<(), DatasetError>,
) -> Result<(), DatasetError> {
    let file = fs::File::open(path).map_err(|e| DatasetError::io(path, e))?;
    let reader = BufReader::new(file);
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| DatasetError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        f(i + 1, &line)?;
    }
    Ok(())
}

/// Serialize records one per line and publish the file atomically via
/// write-then-rename.
pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), DatasetError> {
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r).map_err(|e| {
            DatasetError::io(
                path,
                std::io::Error::new(std::io::ErrorKind::InvalidData, e),
            )
        })?;
        buf.push(b'\n');
    }
    write_atomic(path, &buf)
}

/// Write bytes to `path` through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), DatasetError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp_path = std::path::PathBuf::from(tmp);
    {
        let mut file = fs::File::create(&tmp_path).map_err(|e| DatasetError::io(&tmp_path, e))?;
        file.write_all(bytes)
            .map_err(|e| DatasetError::io(&tmp_path, e))?;
        file.sync_all()
            .map_err(|e| DatasetError::io(&tmp_path, e))?;
    }
    fs::rename(&tmp_path, path).map_err(|e| DatasetError::io(path, e))
}
