//! Domain types shared by every other module: bounding boxes, entity
//! triples, samples, and the per-triple correctness predicates.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Validation failures for the geometric and sample types.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid bounding box ({x1}, {y1}, {x2}, {y2}): {reason}")]
    InvalidBox {
        x1: f64,
        y1: f64,
        x2: f64,
        y2: f64,
        reason: &'static str,
    },
    #[error("entity text is empty after trimming")]
    EmptyEntity,
    #[error("image dimensions must be positive, got {width}x{height}")]
    BadImageSize { width: u32, height: u32 },
    #[error("gold box ({x1}, {y1}, {x2}, {y2}) exceeds image bounds {width}x{height}")]
    BoxOutOfBounds {
        x1: f64,
        y1: f64,
        x2: f64,
        y2: f64,
        width: u32,
        height: u32,
    },
}

/// Axis-aligned bounding box in pixel coordinates, origin at the top-left
/// corner of the image. `(x1, y1)` is the top-left corner of the box,
/// `(x2, y2)` the bottom-right.
///
/// A well-formed box has finite, non-negative coordinates and strictly
/// positive area. [`BBox::new`] enforces this; [`BBox::new_unchecked`] does
/// not, so that syntactically valid but geometrically degenerate model
/// output can still flow through scoring (where it simply never counts as a
/// correct localization).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl BBox {
    /// Construct a validated box.
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self, ModelError> {
        let b = Self { x1, y1, x2, y2 };
        match b.validity_error() {
            None => Ok(b),
            Some(reason) => Err(ModelError::InvalidBox {
                x1,
                y1,
                x2,
                y2,
                reason,
            }),
        }
    }

    /// Construct without validation. Used by the completion parser, which
    /// must accept whatever coordinates the model emitted.
    pub fn new_unchecked(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Self { x1, y1, x2, y2 }
    }

    fn validity_error(&self) -> Option<&'static str> {
        let coords = [self.x1, self.y1, self.x2, self.y2];
        if coords.iter().any(|c| !c.is_finite()) {
            return Some("coordinates must be finite");
        }
        if coords.iter().any(|c| *c < 0.0) {
            return Some("coordinates must be non-negative");
        }
        if self.x1 >= self.x2 || self.y1 >= self.y2 {
            return Some("box must have positive area (x1 < x2 and y1 < y2)");
        }
        None
    }

    /// True when the box satisfies all invariants (finite, non-negative,
    /// positive area).
    pub fn is_valid(&self) -> bool {
        self.validity_error().is_none()
    }

    pub fn area(&self) -> f64 {
        (self.x2 - self.x1) * (self.y2 - self.y1)
    }

    /// Clamp all coordinates into `[0, width] x [0, height]`. The result may
    /// be degenerate if the box lies entirely outside the image.
    pub fn clamp_to(&self, width: u32, height: u32) -> BBox {
        let w = f64::from(width);
        let h = f64::from(height);
        BBox {
            x1: self.x1.clamp(0.0, w),
            y1: self.y1.clamp(0.0, h),
            x2: self.x2.clamp(0.0, w),
            y2: self.y2.clamp(0.0, h),
        }
    }

    fn intersection_area(&self, other: &BBox) -> f64 {
        let w = self.x2.min(other.x2) - self.x1.max(other.x1);
        let h = self.y2.min(other.y2) - self.y1.max(other.y1);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }
}

/// Intersection-over-union of two boxes: intersection area divided by union
/// area. Boxes that are disjoint or touch only on an edge or corner score 0.
///
/// Rejects degenerate (zero-area or otherwise invalid) boxes; use
/// [`iou_or_zero`] inside scoring pipelines that must stay total.
pub fn iou(a: &BBox, b: &BBox) -> Result<f64, ModelError> {
    for bx in [a, b] {
        if let Some(reason) = bx.validity_error() {
            return Err(ModelError::InvalidBox {
                x1: bx.x1,
                y1: bx.y1,
                x2: bx.x2,
                y2: bx.y2,
                reason,
            });
        }
    }
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    Ok(inter / union)
}

/// Total variant of [`iou`]: any invalid box yields 0, so a degenerate
/// predicted box is simply a localization that can never be correct.
pub fn iou_or_zero(a: &BBox, b: &BBox) -> f64 {
    if !a.is_valid() || !b.is_valid() {
        return 0.0;
    }
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    inter / union
}

/// Where an entity lives in the image: a bounding box, or absent (the
/// serialized form is `None`) when the entity is not visually grounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Location {
    Box(BBox),
    Absent,
}

impl Location {
    pub fn is_box(&self) -> bool {
        matches!(self, Location::Box(_))
    }

    pub fn as_box(&self) -> Option<&BBox> {
        match self {
            Location::Box(b) => Some(b),
            Location::Absent => None,
        }
    }
}

// On the wire a location is `[x1, y1, x2, y2]` or `null`.
impl Serialize for Location {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Location::Box(b) => [b.x1, b.y1, b.x2, b.y2].serialize(serializer),
            Location::Absent => serializer.serialize_none(),
        }
    }
}

impl<'de> Deserialize<'de> for Location {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let coords = Option::<[f64; 4]>::deserialize(deserializer)?;
        Ok(match coords {
            Some([x1, y1, x2, y2]) => Location::Box(BBox::new_unchecked(x1, y1, x2, y2)),
            None => Location::Absent,
        })
    }
}

/// The four-way entity taxonomy, plus an escape hatch for model output that
/// names anything else. `Other` never compares equal to a canonical variant.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum EntityType {
    Person,
    Organization,
    Location,
    Miscellaneous,
    Other(String),
}

impl EntityType {
    /// Canonical variants are recognized case-insensitively; anything else
    /// becomes `Other` with the trimmed original text.
    pub fn parse(text: &str) -> EntityType {
        let t = text.trim();
        match t.to_ascii_lowercase().as_str() {
            "person" => EntityType::Person,
            "organization" => EntityType::Organization,
            "location" => EntityType::Location,
            "miscellaneous" => EntityType::Miscellaneous,
            _ => EntityType::Other(t.to_string()),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            EntityType::Person => "person",
            EntityType::Organization => "organization",
            EntityType::Location => "location",
            EntityType::Miscellaneous => "miscellaneous",
            EntityType::Other(s) => s,
        }
    }
}

impl std::fmt::Display for EntityType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for EntityType {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for EntityType {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Ok(EntityType::parse(&s))
    }
}

/// One (entity text, entity type, location) triple, either predicted or gold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityTriple {
    pub entity: String,
    #[serde(rename = "type")]
    pub etype: EntityType,
    #[serde(rename = "bbox")]
    pub loc: Location,
}

impl EntityTriple {
    pub fn new(
        entity: impl Into<String>,
        etype: EntityType,
        loc: Location,
    ) -> Result<Self, ModelError> {
        let entity = entity.into();
        if entity.trim().is_empty() {
            return Err(ModelError::EmptyEntity);
        }
        Ok(Self { entity, etype, loc })
    }
}

/// One dataset sample: a sentence, a reference to its image (identifier
/// only, never pixels), the image dimensions, and the gold triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmnerSample {
    pub id: String,
    pub sentence: String,
    pub image_ref: String,
    pub image_width: u32,
    pub image_height: u32,
    pub gold: Vec<EntityTriple>,
}

impl GmnerSample {
    /// Check the sample invariants: positive image dimensions, non-empty
    /// gold entity texts, and every gold box valid and inside the image.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.image_width == 0 || self.image_height == 0 {
            return Err(ModelError::BadImageSize {
                width: self.image_width,
                height: self.image_height,
            });
        }
        for t in &self.gold {
            if t.entity.trim().is_empty() {
                return Err(ModelError::EmptyEntity);
            }
            if let Location::Box(b) = &t.loc {
                if let Some(reason) = b.validity_error() {
                    return Err(ModelError::InvalidBox {
                        x1: b.x1,
                        y1: b.y1,
                        x2: b.x2,
                        y2: b.y2,
                        reason,
                    });
                }
                let (w, h) = (f64::from(self.image_width), f64::from(self.image_height));
                if b.x2 > w || b.y2 > h {
                    return Err(ModelError::BoxOutOfBounds {
                        x1: b.x1,
                        y1: b.y1,
                        x2: b.x2,
                        y2: b.y2,
                        width: self.image_width,
                        height: self.image_height,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Which correctness conjunction applies: the full task, entity+type only,
/// or entity+grounding only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskMode {
    Gmner,
    Mner,
    Eeg,
}

impl std::str::FromStr for TaskMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gmner" => Ok(TaskMode::Gmner),
            "mner" => Ok(TaskMode::Mner),
            "eeg" => Ok(TaskMode::Eeg),
            other => Err(format!(
                "unknown task mode '{other}' (expected gmner, mner or eeg)"
            )),
        }
    }
}

/// Trim and collapse internal whitespace runs to single spaces. This is the
/// only normalization applied before entity-text comparison; case is kept.
pub fn normalize_entity(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Entity-text correctness: exact equality after whitespace normalization.
pub fn entity_matches(a: &str, b: &str) -> bool {
    normalize_entity(a) == normalize_entity(b)
}

/// Location correctness: both absent, or both boxes with IoU at or above
/// the threshold. A degenerate box never reaches the threshold.
pub fn location_correct(pred: &Location, gold: &Location, iou_threshold: f64) -> bool {
    match (pred, gold) {
        (Location::Absent, Location::Absent) => true,
        (Location::Box(p), Location::Box(g)) => iou_or_zero(p, g) >= iou_threshold,
        _ => false,
    }
}

/// Per-triple correctness under the given mode. The entity check is exact
/// (after whitespace normalization), the type check is plain equality, and
/// the location check follows [`location_correct`].
pub fn triple_correct(
    pred: &EntityTriple,
    gold: &EntityTriple,
    mode: TaskMode,
    iou_threshold: f64,
) -> bool {
    debug_assert!(
        iou_threshold > 0.0 && iou_threshold <= 1.0,
        "iou_threshold must lie in (0, 1]"
    );
    let c_e = entity_matches(&pred.entity, &gold.entity);
    match mode {
        TaskMode::Gmner => {
            c_e && pred.etype == gold.etype && location_correct(&pred.loc, &gold.loc, iou_threshold)
        }
        TaskMode::Mner => c_e && pred.etype == gold.etype,
        TaskMode::Eeg => c_e && location_correct(&pred.loc, &gold.loc, iou_threshold),
    }
}

/// Default IoU threshold used by both the evaluation metrics and the
/// grounding reward.
pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(x1: f64, y1: f64, x2: f64, y2: f64) -> BBox {
        BBox::new(x1, y1, x2, y2).unwrap()
    }

    #[test]
    fn iou_identical_boxes() {
        let a = bx(0.0, 0.0, 10.0, 10.0);
        assert_eq!(iou(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn iou_disjoint_boxes() {
        let a = bx(0.0, 0.0, 10.0, 10.0);
        let b = bx(20.0, 20.0, 30.0, 30.0);
        assert_eq!(iou(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn iou_partial_overlap() {
        // intersection 50, union 150
        let a = bx(0.0, 0.0, 10.0, 10.0);
        let b = bx(5.0, 0.0, 15.0, 10.0);
        assert!((iou(&a, &b).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn iou_edge_touch_is_zero() {
        let a = bx(0.0, 0.0, 10.0, 10.0);
        let b = bx(10.0, 0.0, 20.0, 10.0);
        assert_eq!(iou(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn iou_rejects_degenerate() {
        let a = bx(0.0, 0.0, 10.0, 10.0);
        let zero = BBox::new_unchecked(5.0, 5.0, 5.0, 10.0);
        assert!(iou(&a, &zero).is_err());
        assert_eq!(iou_or_zero(&a, &zero), 0.0);
    }

    #[test]
    fn iou_is_symmetric() {
        let a = bx(1.0, 2.0, 7.0, 9.0);
        let b = bx(3.0, 0.0, 12.0, 5.0);
        assert_eq!(iou(&a, &b).unwrap(), iou(&b, &a).unwrap());
    }

    #[test]
    fn bbox_new_validates() {
        assert!(BBox::new(0.0, 0.0, 10.0, 10.0).is_ok());
        assert!(BBox::new(10.0, 0.0, 10.0, 10.0).is_err());
        assert!(BBox::new(-1.0, 0.0, 10.0, 10.0).is_err());
        assert!(BBox::new(f64::NAN, 0.0, 10.0, 10.0).is_err());
        assert!(BBox::new(5.0, 5.0, 1.0, 10.0).is_err());
    }

    #[test]
    fn clamp_to_image() {
        let b = BBox::new_unchecked(-5.0, 3.0, 120.0, 90.0);
        let c = b.clamp_to(100, 80);
        assert_eq!(c, BBox::new_unchecked(0.0, 3.0, 100.0, 80.0));
    }

    #[test]
    fn entity_type_parsing() {
        assert_eq!(EntityType::parse("Organization"), EntityType::Organization);
        assert_eq!(EntityType::parse(" PERSON "), EntityType::Person);
        assert_eq!(EntityType::parse("team"), EntityType::Other("team".into()));
        assert_ne!(EntityType::Other("person2".into()), EntityType::Person);
    }

    #[test]
    fn entity_normalization() {
        assert_eq!(normalize_entity("  Kevin   Durant "), "Kevin Durant");
        assert!(entity_matches("Spurs", " Spurs "));
        assert!(!entity_matches("spurs", "Spurs"));
    }

    fn spurs(loc: Location) -> EntityTriple {
        EntityTriple::new("Spurs", EntityType::Organization, loc).unwrap()
    }

    #[test]
    fn triple_correct_self_match() {
        let t = spurs(Location::Box(bx(405.0, 216.0, 558.0, 324.0)));
        assert!(triple_correct(&t, &t, TaskMode::Gmner, 0.5));
    }

    #[test]
    fn triple_correct_both_absent() {
        let p = EntityTriple::new("Premier League", EntityType::Organization, Location::Absent)
            .unwrap();
        assert!(triple_correct(&p, &p.clone(), TaskMode::Gmner, 0.5));
    }

    #[test]
    fn triple_correct_eeg_low_iou() {
        let p = spurs(Location::Box(bx(0.0, 0.0, 10.0, 10.0)));
        let g = spurs(Location::Box(bx(405.0, 216.0, 558.0, 324.0)));
        assert!(!triple_correct(&p, &g, TaskMode::Eeg, 0.5));
    }

    #[test]
    fn triple_correct_other_type_never_matches_gold() {
        let p =
            EntityTriple::new("Spurs", EntityType::Other("team".into()), Location::Absent).unwrap();
        let g = spurs(Location::Absent);
        assert!(!triple_correct(&p, &g, TaskMode::Mner, 0.5));
        // but EEG ignores the type entirely
        assert!(triple_correct(&p, &g, TaskMode::Eeg, 0.5));
    }

    #[test]
    fn gmner_implies_mner_and_eeg() {
        // exhaustive over a small grid of entity/type/location agreement
        let boxes = [
            Location::Absent,
            Location::Box(bx(0.0, 0.0, 10.0, 10.0)),
            Location::Box(bx(0.0, 0.0, 9.0, 10.0)),
            Location::Box(bx(50.0, 50.0, 60.0, 60.0)),
        ];
        let names = ["Spurs", "Iggy"];
        let types = [EntityType::Person, EntityType::Organization];
        for pn in names {
            for gn in names {
                for pt in &types {
                    for gt in &types {
                        for pl in &boxes {
                            for gl in &boxes {
                                let p = EntityTriple::new(pn, pt.clone(), *pl).unwrap();
                                let g = EntityTriple::new(gn, gt.clone(), *gl).unwrap();
                                if triple_correct(&p, &g, TaskMode::Gmner, 0.5) {
                                    assert!(triple_correct(&p, &g, TaskMode::Mner, 0.5));
                                    assert!(triple_correct(&p, &g, TaskMode::Eeg, 0.5));
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn sample_validation() {
        let ok = GmnerSample {
            id: "s1".into(),
            sentence: "Spurs win".into(),
            image_ref: "img1.jpg".into(),
            image_width: 640,
            image_height: 480,
            gold: vec![spurs(Location::Box(bx(10.0, 10.0, 100.0, 100.0)))],
        };
        assert!(ok.validate().is_ok());

        let mut out_of_bounds = ok.clone();
        out_of_bounds.gold[0].loc = Location::Box(BBox::new_unchecked(10.0, 10.0, 700.0, 100.0));
        assert!(matches!(
            out_of_bounds.validate(),
            Err(ModelError::BoxOutOfBounds { .. })
        ));

        let mut bad_dims = ok;
        bad_dims.image_width = 0;
        assert!(matches!(
            bad_dims.validate(),
            Err(ModelError::BadImageSize { .. })
        ));
    }

    #[test]
    fn location_serde_round_trip() {
        let t = spurs(Location::Box(bx(405.0, 216.0, 558.0, 324.0)));
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(
            json,
            r#"{"entity":"Spurs","type":"organization","bbox":[405.0,216.0,558.0,324.0]}"#
        );
        let back: EntityTriple = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);

        let absent = r#"{"entity":"Premier League","type":"organization","bbox":null}"#;
        let back: EntityTriple = serde_json::from_str(absent).unwrap();
        assert_eq!(back.loc, Location::Absent);
    }
}
