//! Parsing of tagged model completions into structured predictions, and the
//! inverse serialization of triples back into answer text.
//!
//! Completions may arrive in any of three reasoning styles; all of them end
//! with an `<answer>` block holding one `(entity, type, location)` triple
//! per line. Only the answer block gates format validity. The intermediate
//! tags (`<process>`, `<entity_num>`, `<mner>`, `<entailment>`, `<location>`)
//! are extracted best-effort for bias diagnostics and never affect it.

use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::model::{BBox, EntityTriple, EntityType, Location};

/// The reasoning style a completion was prompted with. Parsing is identical
/// across styles; the distinction matters to prompt rendering and dataset
/// bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReasoningStyle {
    Formal,
    Conclusion,
    Distill,
}

impl std::str::FromStr for ReasoningStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "formal" => Ok(ReasoningStyle::Formal),
            "conclusion" => Ok(ReasoningStyle::Conclusion),
            "distill" => Ok(ReasoningStyle::Distill),
            other => Err(format!(
                "unknown reasoning style '{other}' (expected formal, conclusion or distill)"
            )),
        }
    }
}

/// Whether an intermediate `<entailment>` tag declared an entity visible in
/// the image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Visibility {
    Visible,
    Invisible,
}

/// Structured result of parsing one completion. Total over arbitrary input:
/// every failure shows up in `format_ok` and `diagnostics` rather than as an
/// error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedCompletion {
    pub process_text: Option<String>,
    pub entity_num: Option<u64>,
    pub mner_pairs: Vec<(String, EntityType)>,
    pub entailment_pairs: Vec<(String, Visibility)>,
    pub location_pairs: Vec<(String, Location)>,
    pub answer: Vec<EntityTriple>,
    pub format_ok: bool,
    pub diagnostics: Vec<String>,
}

static PROCESS_RE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"(?is)<process>(.*?)</process>").unwrap());
static ENTITY_NUM_RE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"(?is)<entity_num>(.*?)</entity_num>").unwrap());
static MNER_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"(?is)<mner>(.*?)</mner>").unwrap());
static ENTAILMENT_RE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"(?is)<entailment>(.*?)</entailment>").unwrap());
static LOCATION_RE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"(?is)<location>(.*?)</location>").unwrap());
static ANSWER_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"(?is)<answer>(.*?)</answer>").unwrap());

/// Parse a raw completion. The last `<answer>` block wins when the model
/// restated it; each answer line must be a triple of the form
/// `(entity text, entity type, None | (x1, y1, x2, y2))`, optionally
/// bulleted. Prose lines inside the block are tolerated; a line that starts
/// a triple but cannot be parsed clears `format_ok` and leaves a diagnostic.
pub fn parse_completion(text: &str, _style: ReasoningStyle) -> ParsedCompletion {
    let mut diagnostics = Vec::new();

    let process_text = last_block(&PROCESS_RE, text).map(|s| s.trim().to_string());

    let entity_num = match last_block(&ENTITY_NUM_RE, text) {
        Some(raw) => match raw.trim().parse::<u64>() {
            Ok(n) => Some(n),
            Err(_) => {
                diagnostics.push(format!(
                    "<entity_num> content is not a non-negative integer: {:?}",
                    raw.trim()
                ));
                None
            }
        },
        None => None,
    };

    let mner_pairs = collect_pairs(&MNER_RE, text, &mut diagnostics, "mner", |value| {
        Some(EntityType::parse(value))
    });
    let entailment_pairs = collect_pairs(
        &ENTAILMENT_RE,
        text,
        &mut diagnostics,
        "entailment",
        |value| match value.trim().to_ascii_lowercase().as_str() {
            "visible" => Some(Visibility::Visible),
            "invisible" => Some(Visibility::Invisible),
            _ => None,
        },
    );
    let location_pairs = collect_pairs(&LOCATION_RE, text, &mut diagnostics, "location", |value| {
        parse_location(value).ok()
    });

    let mut answer = Vec::new();
    let mut format_ok;
    match last_block(&ANSWER_RE, text) {
        None => {
            format_ok = false;
            diagnostics.push("no <answer></answer> block found".to_string());
        }
        Some(block) => {
            format_ok = true;
            for line in block.lines() {
                let stripped = strip_bullet(line);
                if stripped.is_empty() {
                    continue;
                }
                if stripped.starts_with('(') {
                    // a committed triple line: every group on it must parse
                    match parse_triple_line(stripped) {
                        Ok(triples) => answer.extend(triples),
                        Err(msg) => {
                            format_ok = false;
                            diagnostics
                                .push(format!("unparseable answer line {stripped:?}: {msg}"));
                        }
                    }
                } else {
                    // prose; still pick up any embedded well-formed triples
                    answer.extend(embedded_triples(stripped));
                }
            }
        }
    }

    if format_ok {
        if let Some(n) = entity_num {
            if n as usize != answer.len() {
                diagnostics.push(format!(
                    "<entity_num> says {n} but the answer holds {} triples",
                    answer.len()
                ));
            }
        }
        // surface disagreements between <location> tags and the answer
        for t in &answer {
            if let Some((_, loc)) = location_pairs
                .iter()
                .find(|(e, _)| crate::model::entity_matches(e, &t.entity))
            {
                if loc.is_box() != t.loc.is_box() {
                    diagnostics.push(format!(
                        "<location> tag and answer disagree on visibility of {:?}; trusting the answer",
                        t.entity
                    ));
                }
            }
        }
    }

    ParsedCompletion {
        process_text,
        entity_num,
        mner_pairs,
        entailment_pairs,
        location_pairs,
        answer,
        format_ok,
        diagnostics,
    }
}

/// Render triples in the answer-line format, one per line: `None` for
/// absent locations, `(x1, y1, x2, y2)` for boxes, with integral
/// coordinates printed as integers.
pub fn serialize_answer(triples: &[EntityTriple]) -> String {
    triples
        .iter()
        .map(|t| {
            format!(
                "({}, {}, {})",
                t.entity,
                t.etype.as_str(),
                match &t.loc {
                    Location::Absent => "None".to_string(),
                    Location::Box(b) => format!(
                        "({}, {}, {}, {})",
                        fmt_coord(b.x1),
                        fmt_coord(b.y1),
                        fmt_coord(b.x2),
                        fmt_coord(b.y2)
                    ),
                }
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn fmt_coord(c: f64) -> String {
    if c.fract() == 0.0 && c.abs() < 1e15 {
        format!("{}", c as i64)
    } else {
        format!("{c}")
    }
}

fn last_block<'t>(re: &Regex, text: &'t str) -> Option<&'t str> {
    re.captures_iter(text)
        .last()
        .map(|c| c.get(1).unwrap().as_str())
}

/// Parse `(entity, value)` pairs from every occurrence of a tag, keeping the
/// last statement per entity. Failures only produce diagnostics.
fn collect_pairs<T>(
    re: &Regex,
    text: &str,
    diagnostics: &mut Vec<String>,
    tag: &str,
    parse_value: impl Fn(&str) -> Option<T>,
) -> Vec<(String, T)> {
    let mut pairs: Vec<(String, T)> = Vec::new();
    for cap in re.captures_iter(text) {
        let block = cap.get(1).unwrap().as_str();
        for group in balanced_groups(block) {
            match split_last_field(group) {
                Some((entity, value)) if !entity.trim().is_empty() => match parse_value(value) {
                    Some(v) => {
                        let entity = entity.trim().to_string();
                        pairs.retain(|(e, _)| !crate::model::entity_matches(e, &entity));
                        pairs.push((entity, v));
                    }
                    None => diagnostics.push(format!(
                        "unrecognized <{tag}> pair value: {:?}",
                        value.trim()
                    )),
                },
                _ => diagnostics.push(format!("unrecognized <{tag}> pair: {group:?}")),
            }
        }
    }
    pairs
}

/// All top-level balanced `(...)` group contents in `text`, in order.
fn balanced_groups(text: &str) -> Vec<&str> {
    let bytes = text.as_bytes();
    let mut groups = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, b) in bytes.iter().enumerate() {
        match b {
            b'(' => {
                if depth == 0 {
                    start = i + 1;
                }
                depth += 1;
            }
            b')' if depth > 0 => {
                depth -= 1;
                if depth == 0 {
                    groups.push(&text[start..i]);
                }
            }
            _ => {}
        }
    }
    groups
}

/// Split `content` at its last top-level comma: `(before, after)`.
fn split_last_field(content: &str) -> Option<(&str, &str)> {
    let idx = top_level_commas(content).pop()?;
    Some((&content[..idx], &content[idx + 1..]))
}

/// Byte offsets of commas not nested inside parentheses.
fn top_level_commas(content: &str) -> Vec<usize> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    for (i, b) in content.bytes().enumerate() {
        match b {
            b'(' => depth += 1,
            b')' => depth = depth.saturating_sub(1),
            b',' if depth == 0 => out.push(i),
            _ => {}
        }
    }
    out
}

fn strip_bullet(line: &str) -> &str {
    let s = line.trim();
    for prefix in ["-", "*", "•"] {
        if let Some(rest) = s.strip_prefix(prefix) {
            return rest.trim_start();
        }
    }
    // numbered bullets: "1." or "1)"
    let digits = s.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits > 0 {
        let rest = &s[digits..];
        if let Some(r) = rest.strip_prefix('.').or_else(|| rest.strip_prefix(')')) {
            return r.trim_start();
        }
    }
    s
}

/// Parse every parenthesized group on a committed triple line. All groups
/// must parse; stray text between groups (separators, trailing punctuation)
/// is ignored.
fn parse_triple_line(line: &str) -> Result<Vec<EntityTriple>, String> {
    let groups = balanced_groups(line);
    if groups.is_empty() {
        return Err("no balanced (entity, type, location) group".to_string());
    }
    groups.into_iter().map(parse_triple_fields).collect()
}

/// Salvage any well-formed triples embedded in a prose line.
fn embedded_triples(line: &str) -> Vec<EntityTriple> {
    balanced_groups(line)
        .into_iter()
        .filter_map(|g| parse_triple_fields(g).ok())
        .collect()
}

/// Parse the interior of one `(...)` group as an entity triple. The final
/// two top-level comma-separated fields are the type and location; whatever
/// precedes them, commas included, is the entity span.
fn parse_triple_fields(content: &str) -> Result<EntityTriple, String> {
    let commas = top_level_commas(content);
    if commas.len() < 2 {
        return Err("expected (entity text, entity type, location)".to_string());
    }
    let c2 = commas[commas.len() - 1];
    let c1 = commas[commas.len() - 2];
    let entity = content[..c1].trim();
    let type_str = content[c1 + 1..c2].trim();
    let loc_str = content[c2 + 1..].trim();
    if entity.is_empty() {
        return Err("empty entity text".to_string());
    }
    if type_str.is_empty() {
        return Err("empty entity type".to_string());
    }
    let loc = parse_location(loc_str)?;
    Ok(EntityTriple {
        entity: entity.to_string(),
        etype: EntityType::parse(type_str),
        loc,
    })
}

/// A location field: `None` (any case) or `(x1, y1, x2, y2)` with real
/// coordinates. Coordinates are accepted verbatim; geometric validity is a
/// scoring concern, not a parsing one.
fn parse_location(text: &str) -> Result<Location, String> {
    let t = text.trim();
    if t.eq_ignore_ascii_case("none") {
        return Ok(Location::Absent);
    }
    let inner = t
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| format!("unrecognized location {t:?}"))?;
    let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(format!("expected 4 coordinates, got {}", parts.len()));
    }
    let mut coords = [0.0f64; 4];
    for (slot, part) in coords.iter_mut().zip(&parts) {
        *slot = part
            .parse::<f64>()
            .map_err(|_| format!("bad coordinate {part:?}"))?;
        if !slot.is_finite() {
            return Err(format!("non-finite coordinate {part:?}"));
        }
    }
    Ok(Location::Box(BBox::new_unchecked(
        coords[0], coords[1], coords[2], coords[3],
    )))
}
