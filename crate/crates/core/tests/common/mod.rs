#![allow(dead_code)]

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use wardchain::constraints::Flip;
use wardchain::gridkit::{GridSpec, PopulationModel, VoteModel};
use wardchain::{is_valid_flip, CompactnessMode, DualGraph, Plan, ValidityConfig};

/// Per-district totals recomputed from the node and edge lists, without
/// touching adjacency or any plan cache.
#[derive(Clone, Debug, PartialEq)]
pub struct Totals {
    pub population: f64,
    pub rep: f64,
    pub dem: f64,
    pub area: f64,
    pub perimeter: f64,
    pub wards: usize,
}

pub fn totals(graph: &DualGraph, assignment: &[usize]) -> Vec<Totals> {
    let mut t = vec![Totals { population: 0.0, rep: 0.0, dem: 0.0, area: 0.0, perimeter: 0.0, wards: 0 }; graph.num_districts()];
    for node in graph.nodes() {
        let d = &mut t[assignment[node.id]];
        d.population += node.population;
        d.rep += node.rep_votes;
        d.dem += node.dem_votes;
        d.area += node.area;
        d.perimeter += node.outer_boundary;
        d.wards += 1;
    }
    for e in graph.edges() {
        let (a, b) = (assignment[e.u], assignment[e.v]);
        if a != b {
            t[a].perimeter += e.shared_length;
            t[b].perimeter += e.shared_length;
        }
    }
    t
}

pub fn boundary_pairs(graph: &DualGraph, assignment: &[usize]) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for e in graph.edges() {
        let (a, b) = (assignment[e.u], assignment[e.v]);
        if a != b {
            pairs.push((e.u, b));
            pairs.push((e.v, a));
        }
    }
    pairs.sort();
    pairs.dedup();
    pairs
}

/// Efficiency gap straight from the wasted-vote definition.
pub fn eg_oracle(votes: &[(f64, f64)]) -> f64 {
    let mut wasted_rep = 0.0;
    let mut wasted_dem = 0.0;
    let mut total = 0.0;
    for &(r, d) in votes {
        let t = r + d;
        total += t;
        if r > d {
            wasted_rep += r - t / 2.0;
            wasted_dem += d;
        } else if d > r {
            wasted_dem += d - t / 2.0;
            wasted_rep += r;
        } else {
            wasted_rep += r;
            wasted_dem += d;
        }
    }
    (wasted_dem - wasted_rep) / total
}

pub fn seed_score(graph: &DualGraph, assignment: &[usize], mode: CompactnessMode) -> f64 {
    totals(graph, assignment)
        .iter()
        .map(|t| match mode {
            CompactnessMode::Perimeter => t.perimeter,
            CompactnessMode::L1 => t.perimeter * t.perimeter / t.area,
            CompactnessMode::L2 => (t.perimeter * t.perimeter / t.area).powi(2),
        })
        .sum()
}

/// A small random grid instance: 3..=6 on each side, 2 or 3 districts,
/// seeded votes, some two-cell counties and sometimes a frozen district.
pub fn random_instance(seed: u64) -> (GridSpec, ValidityConfig) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = rng.random_range(3..=6);
    let cols = rng.random_range(3..=6);
    let num_districts = rng.random_range(2..=3);
    let n = rows * cols;
    let mut counties: Vec<String> = (0..n).map(|i| format!("c{i}")).collect();
    for _ in 0..rng.random_range(0..=n / 4) {
        let a = rng.random_range(0..n);
        let b = if a % cols + 1 < cols { a + 1 } else { a - 1 };
        counties[b] = counties[a].clone();
    }
    let frozen = if num_districts == 3 && rng.random_bool(0.3) { vec![0] } else { Vec::new() };
    let spec = GridSpec {
        votes: VoteModel::Seeded(rng.random()),
        counties: Some(counties),
        frozen,
        ..GridSpec::new(rows, cols, num_districts)
    };
    let cfg = ValidityConfig {
        pop_tolerance_wards: [1.5, 2.0, 3.0][rng.random_range(0..3)],
        compactness_mode: CompactnessMode::ALL[rng.random_range(0..3)],
        compactness_budget: [1.1, 1.3, 2.0][rng.random_range(0..3)],
        enforce_counties: rng.random_bool(0.5),
        enforce_mm: rng.random_bool(0.7),
    };
    (spec, cfg)
}

/// 6x6, three column-pair districts, the leftmost frozen. Columns 2 and 5
/// weigh 9 per ward so only the two middle columns can trade wards.
pub fn heavy_strip() -> (DualGraph, Plan, ValidityConfig) {
    let pops = (0..36).map(|id| match id % 6 { 0 | 1 => 5.0, 2 | 5 => 9.0, _ => 1.0 }).collect();
    let spec = GridSpec {
        population: PopulationModel::Table(pops),
        frozen: vec![0],
        votes: VoteModel::Seeded(36),
        ..GridSpec::new(6, 6, 3)
    };
    let (g, p) = spec.generate().unwrap();
    let cfg = ValidityConfig {
        pop_tolerance_wards: 0.9,
        compactness_mode: CompactnessMode::L2,
        compactness_budget: 1.5,
        enforce_counties: false,
        enforce_mm: true,
    };
    (g, p, cfg)
}

/// 6x6, three column-pair districts, the leftmost frozen, unit population.
pub fn frozen_band() -> (DualGraph, Plan, ValidityConfig) {
    let spec = GridSpec { frozen: vec![0], votes: VoteModel::Seeded(6), ..GridSpec::new(6, 6, 3) };
    let (g, p) = spec.generate().unwrap();
    let cfg = ValidityConfig {
        pop_tolerance_wards: 2.0,
        compactness_mode: CompactnessMode::L2,
        compactness_budget: 1.5,
        enforce_counties: false,
        enforce_mm: true,
    };
    (g, p, cfg)
}

/// Number of `(ward, district)` proposals carrying each plan to each other
/// plan, keyed by plan index. Self-loops are omitted.
pub fn proposal_counts(graph: &DualGraph, cfg: &ValidityConfig, seed: f64, plans: &[Vec<usize>]) -> HashMap<(usize, usize), u64> {
    let index: HashMap<&[usize], usize> = plans.iter().enumerate().map(|(i, p)| (p.as_slice(), i)).collect();
    let mut counts = HashMap::new();
    for (i, a) in plans.iter().enumerate() {
        let plan = Plan::build(graph, Some(a.clone())).unwrap();
        for w in 0..graph.num_wards() {
            for d in 0..graph.num_districts() {
                if is_valid_flip(&plan, graph, cfg, seed, Flip::new(w, d)) {
                    let mut b = a.clone();
                    b[w] = d;
                    let j = *index.get(b.as_slice()).expect("valid flip leaves the plan set");
                    *counts.entry((i, j)).or_insert(0) += 1;
                }
            }
        }
    }
    counts
}

/// Upper-tail p-value of Pearson's statistic against equal expected counts.
pub fn uniform_chi_square_p(counts: &[u64]) -> f64 {
    let m: u64 = counts.iter().sum();
    let expected = m as f64 / counts.len() as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    1.0 - ChiSquared::new((counts.len() - 1) as f64).unwrap().cdf(stat)
}
