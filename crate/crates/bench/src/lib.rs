//! Deterministic input generators shared by the benchmarks.

use gmner_core::{BBox, EntityTriple, EntityType, GmnerSample, Location};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORDS: &[&str] = &[
    "Kevin",
    "Durant",
    "New",
    "York",
    "City",
    "Spurs",
    "Premier",
    "League",
    "Iggy",
    "Hall",
    "NBA",
    "United",
    "Manchester",
    "Gaga",
];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn entity(rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(1..=3);
    (0..n)
        .map(|_| WORDS[rng.random_range(0..WORDS.len())])
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn triple(rng: &mut ChaCha8Rng) -> EntityTriple {
    let etype = match rng.random_range(0..4) {
        0 => EntityType::Person,
        1 => EntityType::Organization,
        2 => EntityType::Location,
        _ => EntityType::Miscellaneous,
    };
    let loc = if rng.random_range(0..2) == 0 {
        Location::Absent
    } else {
        let x1 = rng.random_range(0..900) as f64;
        let y1 = rng.random_range(0..900) as f64;
        Location::Box(
            BBox::new(
                x1,
                y1,
                x1 + rng.random_range(1..=100) as f64,
                y1 + rng.random_range(1..=100) as f64,
            )
            .unwrap(),
        )
    };
    EntityTriple::new(entity(rng), etype, loc).unwrap()
}

pub fn triples(rng: &mut ChaCha8Rng, n: usize) -> Vec<EntityTriple> {
    (0..n).map(|_| triple(rng)).collect()
}

pub fn sample(rng: &mut ChaCha8Rng, id: &str, entities: usize) -> GmnerSample {
    let gold = triples(rng, entities);
    GmnerSample {
        id: id.to_string(),
        sentence: gold
            .iter()
            .map(|t| t.entity.clone())
            .collect::<Vec<_>>()
            .join(" and "),
        image_ref: format!("{id}.jpg"),
        image_width: 1000,
        image_height: 1000,
        gold,
    }
}

/// A plausibly imperfect completion for the sample: most entities kept,
/// some spans truncated, some boxes jittered.
pub fn completion_for(rng: &mut ChaCha8Rng, sample: &GmnerSample) -> String {
    let mut lines = Vec::new();
    for t in &sample.gold {
        if rng.random_range(0..10) == 0 {
            continue; // dropped entity
        }
        let entity = if rng.random_range(0..5) == 0 {
            t.entity.split_whitespace().next().unwrap().to_string()
        } else {
            t.entity.clone()
        };
        let loc = match &t.loc {
            Location::Absent => "None".to_string(),
            Location::Box(b) => format!(
                "({}, {}, {}, {})",
                b.x1 + rng.random_range(0..10) as f64,
                b.y1,
                b.x2 + rng.random_range(0..10) as f64,
                b.y2
            ),
        };
        lines.push(format!("({entity}, {}, {loc})", t.etype));
    }
    format!(
        "<process>checking text and image evidence for each candidate</process>\n<answer>\n{}\n</answer>",
        lines.join("\n")
    )
}
