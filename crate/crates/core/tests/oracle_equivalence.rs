mod common;

use proptest::prelude::*;
use wardchain::chain::{chain_rng, step};
use wardchain::constraints::{check_seed, Flip};
use wardchain::gridkit::oracle_valid_flip;
use wardchain::{is_valid_flip, DualGraph, Plan, ValidityConfig};

/// Compares every `(ward, district)` verdict on `plan`; returns how many
/// proposals were checked and how many of them were valid.
fn compare_all(graph: &DualGraph, plan: &Plan, cfg: &ValidityConfig, seed: f64) -> (usize, usize) {
    let mut checked = 0;
    let mut valid = 0;
    for w in 0..graph.num_wards() {
        for d in 0..graph.num_districts() {
            let flip = Flip::new(w, d);
            let fast = is_valid_flip(plan, graph, cfg, seed, flip);
            let slow = oracle_valid_flip(graph, plan, cfg, seed, flip);
            assert_eq!(fast, slow, "ward {w} -> {d} on {:?} with {cfg:?}", plan.assignment());
            checked += 1;
            valid += usize::from(fast);
        }
    }
    (checked, valid)
}

/// Walks a chain on the instance and compares verdicts at several states.
fn check_instance(instance: u64, states: usize, gap: u64) -> (usize, usize) {
    let (spec, cfg) = common::random_instance(instance);
    let (graph, seed_plan) = spec.generate().unwrap();
    let seed = check_seed(&seed_plan, &graph, &cfg).unwrap();
    assert_eq!(seed, common::seed_score(&graph, seed_plan.assignment(), cfg.compactness_mode));
    let mut plan = seed_plan;
    let mut rng = chain_rng(instance, 0);
    let (mut checked, mut valid) = (0, 0);
    for _ in 0..states {
        let (c, v) = compare_all(&graph, &plan, &cfg, seed);
        checked += c;
        valid += v;
        for _ in 0..gap {
            step(&mut plan, &graph, &cfg, seed, &mut rng, false, 0.0).unwrap();
        }
    }
    (checked, valid)
}

#[test]
fn incremental_predicates_match_oracle_on_generated_instances() {
    let (mut checked, mut valid) = (0, 0);
    for instance in 0..24 {
        let (c, v) = check_instance(instance, 12, 150);
        checked += c;
        valid += v;
    }
    assert!(checked > 10_000, "{checked}");
    assert!(valid > 200, "{valid}");
}

#[test]
fn heavy_and_frozen_fixtures_agree_with_oracle() {
    for (graph, seed_plan, cfg) in [common::heavy_strip(), common::frozen_band()] {
        let seed = check_seed(&seed_plan, &graph, &cfg).unwrap();
        let mut plan = seed_plan;
        let mut rng = chain_rng(3, 0);
        for _ in 0..20 {
            compare_all(&graph, &plan, &cfg, seed);
            for _ in 0..500 {
                step(&mut plan, &graph, &cfg, seed, &mut rng, false, 0.0).unwrap();
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn oracle_agreement_holds_for_arbitrary_instances(instance in 1000u64..1_000_000) {
        check_instance(instance, 3, 60);
    }
}
