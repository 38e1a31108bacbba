mod common;

use std::path::PathBuf;

use wardchain::chain::{chain_rng, propose, step, CsvTrace};
use wardchain::constraints::check_seed;
use wardchain::gridkit::{oracle_plan_valid, reachable_plans, GridSpec, VoteModel};
use wardchain::{run_trajectory, ChainConfig, CompactnessMode, Sinks, TrajectoryRecord, ValidityConfig};

fn loose(mode: CompactnessMode) -> ValidityConfig {
    ValidityConfig {
        pop_tolerance_wards: 3.0,
        compactness_mode: mode,
        compactness_budget: 1.5,
        enforce_counties: true,
        enforce_mm: true,
    }
}

#[test]
fn every_state_on_a_long_run_is_globally_valid() {
    for (instance, mode) in [(1u64, CompactnessMode::Perimeter), (2, CompactnessMode::L1), (3, CompactnessMode::L2)] {
        let spec = GridSpec { votes: VoteModel::Seeded(instance), ..GridSpec::new(6, 6, 3) };
        let (graph, seed_plan) = spec.generate().unwrap();
        let cfg = loose(mode);
        let seed = check_seed(&seed_plan, &graph, &cfg).unwrap();
        let mut plan = seed_plan;
        let mut rng = chain_rng(instance, 0);
        let mut accepted = 0;
        for _ in 0..10_000 {
            let out = step(&mut plan, &graph, &cfg, seed, &mut rng, false, 0.0).unwrap();
            accepted += u32::from(out.accepted);
            assert!(oracle_plan_valid(&graph, plan.assignment(), &cfg, seed), "{:?}", plan.assignment());
        }
        assert!(accepted > 100, "chain barely moved: {accepted}");
    }
}

#[test]
fn proposals_cover_every_pair_uniformly() {
    let (graph, _) = GridSpec::new(4, 4, 2).generate().unwrap();
    let mut rng = chain_rng(77, 0);
    let draws = 1_000_000u64;
    let mut counts = vec![0u64; 32];
    for _ in 0..draws {
        let f = propose(&mut rng, &graph);
        counts[f.ward * 2 + f.to] += 1;
    }
    let p = 1.0 / 32.0;
    let mean = draws as f64 * p;
    let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
    for (pair, &c) in counts.iter().enumerate() {
        assert!((c as f64 - mean).abs() <= 3.0 * sigma, "pair {pair}: {c} vs {mean} +- {sigma}");
    }
}

#[test]
fn proposal_kernel_is_exactly_symmetric() {
    let spec = GridSpec { votes: VoteModel::Seeded(5), ..GridSpec::new(4, 4, 2) };
    let (graph, seed_plan) = spec.generate().unwrap();
    for mode in CompactnessMode::ALL {
        let cfg = ValidityConfig { compactness_budget: 2.0, ..loose(mode) };
        let seed = check_seed(&seed_plan, &graph, &cfg).unwrap();
        let plans = reachable_plans(&graph, &cfg, &seed_plan, 100_000).unwrap();
        assert!(plans.len() > 10, "{mode}: {}", plans.len());
        let counts = common::proposal_counts(&graph, &cfg, seed, &plans);
        for (&(i, j), &c) in &counts {
            assert_eq!(counts.get(&(j, i)), Some(&c), "{i} -> {j}");
        }
    }
    for (graph, seed_plan, cfg) in [common::heavy_strip(), common::frozen_band()] {
        let seed = check_seed(&seed_plan, &graph, &cfg).unwrap();
        let plans = reachable_plans(&graph, &cfg, &seed_plan, 100_000).unwrap();
        let counts = common::proposal_counts(&graph, &cfg, seed, &plans);
        assert!(counts.iter().all(|(&(i, j), &c)| counts.get(&(j, i)) == Some(&c)));
    }
}

#[test]
fn trajectory_counts_match_its_trace() {
    let spec = GridSpec { votes: VoteModel::Seeded(8), ..GridSpec::new(5, 5, 2) };
    let (graph, seed_plan) = spec.generate().unwrap();
    let cfg = loose(CompactnessMode::Perimeter);
    let mut trace: Vec<TrajectoryRecord> = Vec::new();
    let out = run_trajectory(
        &graph,
        seed_plan,
        &cfg,
        &ChainConfig::new(3_000, 4),
        Sinks { trace: Some(&mut trace), reservoir: None },
    )
    .unwrap();
    assert_eq!(trace.len(), 3_001);
    let seed_label = trace[0].label;
    let bad = trace.iter().filter(|r| r.label >= seed_label).count() as u64;
    assert_eq!(out.report.total_states, 3_001);
    assert_eq!(out.report.as_bad_count, bad);
    assert_eq!(out.report.epsilon, bad as f64 / 3_001.0);
    assert_eq!(out.report.config.accepted_steps, trace.iter().filter(|r| r.accepted).count() as u64);
    for pair in trace.windows(2) {
        if !pair[1].accepted {
            assert_eq!(pair[1].label, pair[0].label);
        }
    }
}

fn golden_trace() -> String {
    let spec = GridSpec { votes: VoteModel::Seeded(7), ..GridSpec::new(4, 4, 2) };
    let (graph, seed_plan) = spec.generate().unwrap();
    let cfg = ValidityConfig { pop_tolerance_wards: 2.0, compactness_budget: 1.5, ..loose(CompactnessMode::L1) };
    let mut sink = CsvTrace::new(Vec::new());
    run_trajectory(&graph, seed_plan, &cfg, &ChainConfig::new(200, 7), Sinks { trace: Some(&mut sink), reservoir: None })
        .unwrap();
    String::from_utf8(sink.into_inner().unwrap()).unwrap()
}

#[test]
fn trace_matches_pinned_golden_file() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/trace_4x4_l1_seed7.csv");
    let got = golden_trace();
    if std::env::var_os("WARDCHAIN_BLESS").is_some() {
        std::fs::write(&path, &got).unwrap();
    }
    let want = std::fs::read_to_string(&path).expect("golden trace missing; rerun with WARDCHAIN_BLESS=1");
    assert_eq!(got, want);
    assert!(want.lines().skip(1).any(|l| l.contains(",true,")), "golden run never accepts a flip");
}

#[test]
fn identical_configs_give_identical_runs() {
    assert_eq!(golden_trace(), golden_trace());
}
