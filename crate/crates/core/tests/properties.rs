//! Property tests over generated inputs: parser totality and round-trip,
//! geometry laws, matching optimality on small instances, reward bounds,
//! and advantage normalization.

use gmner_core::{
    count_reward, entailment_reward, evaluate_corpus, grounding_reward, group_advantages,
    group_stats, iou, match_entities, parse_completion, score_triples, serialize_answer,
    span_reward, type_reward, BBox, EntityTriple, EntityType, GmnerSample, Location,
    ReasoningStyle, RewardConfig, RewardGroup, SamplePrediction, TaskMode,
};
use proptest::prelude::*;

fn entity_word() -> impl Strategy<Value = String> {
    "[A-Za-z][A-Za-z0-9'.-]{0,6}".prop_map(|s| s)
}

/// Normalized entity text, occasionally containing internal commas, never
/// parentheses (the answer grammar treats them as structure).
fn entity_text() -> impl Strategy<Value = String> {
    (
        proptest::collection::vec(entity_word(), 1..4),
        proptest::collection::vec(prop_oneof![Just(" "), Just(", ")], 3),
    )
        .prop_map(|(words, seps)| {
            let mut out = words[0].clone();
            for (w, s) in words[1..].iter().zip(seps) {
                out.push_str(s);
                out.push_str(w);
            }
            out
        })
}

fn entity_type() -> impl Strategy<Value = EntityType> {
    prop_oneof![
        Just(EntityType::Person),
        Just(EntityType::Organization),
        Just(EntityType::Location),
        Just(EntityType::Miscellaneous),
        "[a-z]{2,8}"
            .prop_filter("not a canonical type name", |s| {
                !matches!(
                    s.as_str(),
                    "person" | "organization" | "location" | "miscellaneous"
                )
            })
            .prop_map(EntityType::Other),
    ]
}

fn int_box() -> impl Strategy<Value = BBox> {
    (0u32..990, 0u32..990, 1u32..=100, 1u32..=100).prop_map(|(x1, y1, w, h)| {
        BBox::new(
            f64::from(x1),
            f64::from(y1),
            f64::from(x1 + w),
            f64::from(y1 + h),
        )
        .unwrap()
    })
}

fn location() -> impl Strategy<Value = Location> {
    prop_oneof![Just(Location::Absent), int_box().prop_map(Location::Box)]
}

fn triple() -> impl Strategy<Value = EntityTriple> {
    (entity_text(), entity_type(), location())
        .prop_map(|(e, t, l)| EntityTriple::new(e, t, l).unwrap())
}

fn triples(max: usize) -> impl Strategy<Value = Vec<EntityTriple>> {
    proptest::collection::vec(triple(), 0..=max)
}

fn sample_from(gold: Vec<EntityTriple>) -> GmnerSample {
    GmnerSample {
        id: "s".into(),
        sentence: gold
            .iter()
            .map(|t| t.entity.clone())
            .collect::<Vec<_>>()
            .join(" and "),
        image_ref: "s.jpg".into(),
        image_width: 2000,
        image_height: 2000,
        gold,
    }
}

/// Exhaustive maximum over injective assignments; independent of the
/// Hungarian path.
fn brute_force_best_total(preds: &[EntityTriple], golds: &[EntityTriple]) -> f64 {
    fn go(i: usize, used: &mut Vec<bool>, preds: &[EntityTriple], golds: &[EntityTriple]) -> f64 {
        if i == preds.len() {
            return 0.0;
        }
        // leave pred i unmatched
        let mut best = go(i + 1, used, preds, golds);
        for j in 0..golds.len() {
            if used[j] {
                continue;
            }
            used[j] = true;
            let f1 = gmner_core::token_f1(&preds[i].entity, &golds[j].entity).f1;
            best = best.max(f1 + go(i + 1, used, preds, golds));
            used[j] = false;
        }
        best
    }
    go(0, &mut vec![false; golds.len()], preds, golds)
}

proptest! {
    #[test]
    fn parse_is_total_over_arbitrary_text(text in ".*") {
        let parsed = parse_completion(&text, ReasoningStyle::Distill);
        prop_assert!(parsed.answer.len() < usize::MAX); // reached without panicking
    }

    #[test]
    fn parse_is_total_over_tag_like_noise(
        text in r"(<answer>|</answer>|<process>|\(|\)|,|None|[a-z]{1,5}| |\n){0,40}"
    ) {
        let _ = parse_completion(&text, ReasoningStyle::Formal);
    }

    #[test]
    fn serialize_then_parse_round_trips(ts in triples(5)) {
        let wrapped = format!(
            "<process>some reasoning</process>\n<answer>{}</answer>\ntrailing prose",
            serialize_answer(&ts)
        );
        for style in [ReasoningStyle::Formal, ReasoningStyle::Conclusion, ReasoningStyle::Distill] {
            let parsed = parse_completion(&wrapped, style);
            prop_assert!(parsed.format_ok, "diagnostics: {:?}", parsed.diagnostics);
            prop_assert_eq!(&parsed.answer, &ts);
        }
    }

    #[test]
    fn iou_symmetry_and_identity(a in int_box(), b in int_box()) {
        prop_assert_eq!(iou(&a, &b).unwrap(), iou(&b, &a).unwrap());
        prop_assert_eq!(iou(&a, &a).unwrap(), 1.0);
        let v = iou(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
        // IoU 1 only for identical boxes
        if v == 1.0 {
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn iou_of_contained_box_is_area_ratio(outer in int_box(), dx in 0u32..20, dy in 0u32..20) {
        let inner = BBox::new(
            outer.x1 + f64::from(dx).min(outer.x2 - outer.x1 - 1.0).max(0.0) * 0.5,
            outer.y1 + f64::from(dy).min(outer.y2 - outer.y1 - 1.0).max(0.0) * 0.5,
            outer.x2,
            outer.y2,
        ).unwrap();
        let expected = inner.area() / outer.area();
        prop_assert!((iou(&inner, &outer).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn matching_total_is_optimal_on_small_instances(
        preds in triples(4),
        golds in triples(4),
    ) {
        let m = match_entities(&preds, &golds);
        let best = brute_force_best_total(&preds, &golds);
        prop_assert!((m.total_f1() - best).abs() < 1e-9,
            "matching total {} vs brute force {}", m.total_f1(), best);
    }

    #[test]
    fn matching_is_permutation_invariant(
        golds in triples(4),
        mut preds in triples(4),
        seed in any::<u64>(),
    ) {
        let base = match_entities(&preds, &golds);
        // deterministic shuffle of the predictions
        let n = preds.len();
        let mut state = seed;
        for i in (1..n).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            preds.swap(i, (state >> 33) as usize % (i + 1));
        }
        let shuffled = match_entities(&preds, &golds);
        prop_assert_eq!(base.k(), shuffled.k());
        let mut a: Vec<u64> = base.pairs.iter().map(|p| p.score.f1.to_bits()).collect();
        let mut b: Vec<u64> = shuffled.pairs.iter().map(|p| p.score.f1.to_bits()).collect();
        a.sort_unstable();
        b.sort_unstable();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn reward_components_stay_in_unit_interval(
        preds in triples(5),
        golds in triples(5),
        sigma in 0.0f64..0.95,
    ) {
        let m = match_entities(&preds, &golds);
        for r in [
            count_reward(preds.len(), golds.len()),
            span_reward(&m),
            type_reward(&m, &preds, &golds),
            grounding_reward(&m, &preds, &golds, sigma),
            entailment_reward(&m, &preds, &golds),
        ] {
            prop_assert!((0.0..=1.0).contains(&r), "component {r} out of range");
        }
    }

    #[test]
    fn perfect_predictions_earn_every_component(gold in triples(4)) {
        let sample = sample_from(gold.clone());
        let b = score_triples(&gold, &sample, &RewardConfig::default());
        prop_assert_eq!(b.r_count, 1.0);
        prop_assert_eq!(b.r_span, 1.0);
        prop_assert_eq!(b.r_type, 1.0);
        prop_assert_eq!(b.r_ground, 1.0);
        prop_assert_eq!(b.r_entail, 1.0);
        prop_assert!((b.total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn count_reward_is_one_only_at_equality(p in 0usize..32, q in 0usize..32) {
        let r = count_reward(p, q);
        prop_assert!((0.0..=1.0).contains(&r));
        prop_assert_eq!(r == 1.0, p == q);
    }

    #[test]
    fn advantages_are_standardized(
        rewards in proptest::collection::vec(0.0f64..1.0, 2..64),
    ) {
        let group = RewardGroup::new(rewards.clone()).unwrap();
        let adv = group_advantages(&group);
        let stats = group_stats(&group);
        if stats.std == 0.0 {
            prop_assert!(adv.iter().all(|a| *a == 0.0));
        } else {
            let g = adv.len() as f64;
            let mean = adv.iter().sum::<f64>() / g;
            let var = adv.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / g;
            prop_assert!(mean.abs() < 1e-9, "mean {mean}");
            prop_assert!((var.sqrt() - 1.0).abs() < 1e-9, "std {}", var.sqrt());
        }
    }

    #[test]
    fn advantages_are_shift_and_scale_invariant(
        rewards in proptest::collection::vec(0.0f64..1.0, 2..32),
        shift in -5.0f64..5.0,
        scale in 0.1f64..10.0,
    ) {
        let base = group_advantages(&RewardGroup::new(rewards.clone()).unwrap());
        let shifted: Vec<f64> = rewards.iter().map(|r| r + shift).collect();
        let scaled: Vec<f64> = rewards.iter().map(|r| r * scale).collect();
        let a_shift = group_advantages(&RewardGroup::new(shifted).unwrap());
        let a_scale = group_advantages(&RewardGroup::new(scaled).unwrap());
        for ((b, s), c) in base.iter().zip(&a_shift).zip(&a_scale) {
            prop_assert!((b - s).abs() < 1e-9);
            prop_assert!((b - c).abs() < 1e-9);
        }
    }

    #[test]
    fn gmner_correct_count_is_bounded_by_subtask_counts(
        golds in triples(4),
        preds in triples(4),
    ) {
        let samples = vec![sample_from(golds)];
        let predictions = vec![SamplePrediction { sample_id: "s".into(), triples: preds }];
        let g = evaluate_corpus(&predictions, &samples, TaskMode::Gmner, 0.5).unwrap();
        let m = evaluate_corpus(&predictions, &samples, TaskMode::Mner, 0.5).unwrap();
        let e = evaluate_corpus(&predictions, &samples, TaskMode::Eeg, 0.5).unwrap();
        prop_assert!(g.correct <= m.correct);
        prop_assert!(g.correct <= e.correct);
    }
}
