//! Validity predicates for single-ward flips.
//!
//! A plan is valid when every district is contiguous, every district's
//! population lies strictly within `pop_tolerance_wards` average-ward
//! populations of the ideal, the plan-level compactness score stays within
//! `compactness_budget` times the seed plan's score, intact multi-ward
//! counties stay whole and frozen districts keep their exact membership.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::DualGraph;
use crate::plan::{DistrictStats, Plan};

/// A proposed move of one ward into another district.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Flip {
    pub ward: usize,
    pub to: usize,
}

impl Flip {
    pub fn new(ward: usize, to: usize) -> Self {
        Flip { ward, to }
    }
}

/// Plan-level geometric score that is budgeted relative to the seed plan.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompactnessMode {
    /// Sum of district perimeters.
    Perimeter,
    /// Sum of per-district isoperimetric ratios `perimeter^2 / area`.
    L1,
    /// Sum of squared isoperimetric ratios.
    L2,
}

impl CompactnessMode {
    pub const ALL: [CompactnessMode; 3] = [CompactnessMode::Perimeter, CompactnessMode::L1, CompactnessMode::L2];

    /// Contribution of one district to the plan score.
    #[inline]
    pub fn district_term(self, s: &DistrictStats) -> f64 {
        match self {
            CompactnessMode::Perimeter => s.perimeter,
            CompactnessMode::L1 => s.perimeter * s.perimeter / s.area,
            CompactnessMode::L2 => {
                let r = s.perimeter * s.perimeter / s.area;
                r * r
            }
        }
    }

    /// Plan score over district statistics, summed in district order.
    pub fn score(self, stats: &[DistrictStats]) -> f64 {
        stats.iter().map(|s| self.district_term(s)).sum()
    }
}

impl fmt::Display for CompactnessMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CompactnessMode::Perimeter => "Perimeter",
            CompactnessMode::L1 => "L1",
            CompactnessMode::L2 => "L2",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidityConfig {
    /// Allowed `|pop(d) - ideal|`, in units of the average ward population.
    #[serde(default = "default_tolerance")]
    pub pop_tolerance_wards: f64,
    #[serde(default = "default_mode")]
    pub compactness_mode: CompactnessMode,
    /// Allowed score as a multiple of the seed plan's score.
    #[serde(default = "default_budget")]
    pub compactness_budget: f64,
    #[serde(default = "default_true")]
    pub enforce_counties: bool,
    #[serde(default = "default_true")]
    pub enforce_mm: bool,
}

fn default_tolerance() -> f64 {
    1.0
}
fn default_mode() -> CompactnessMode {
    CompactnessMode::Perimeter
}
fn default_budget() -> f64 {
    1.0
}
fn default_true() -> bool {
    true
}

impl Default for ValidityConfig {
    fn default() -> Self {
        ValidityConfig {
            pop_tolerance_wards: default_tolerance(),
            compactness_mode: default_mode(),
            compactness_budget: default_budget(),
            enforce_counties: true,
            enforce_mm: true,
        }
    }
}

impl ValidityConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.pop_tolerance_wards.is_finite() && self.pop_tolerance_wards > 0.0) {
            return Err(Error::Config(format!("pop_tolerance_wards must be > 0, got {}", self.pop_tolerance_wards)));
        }
        if !(self.compactness_budget.is_finite() && self.compactness_budget > 0.0) {
            return Err(Error::Config(format!("compactness_budget must be > 0, got {}", self.compactness_budget)));
        }
        Ok(())
    }

    /// Largest allowed absolute deviation from the ideal district population.
    #[inline]
    pub fn max_deviation(&self, graph: &DualGraph) -> f64 {
        self.pop_tolerance_wards * graph.mean_ward_population()
    }

    #[inline]
    pub fn population_ok(&self, graph: &DualGraph, population: f64) -> bool {
        (population - graph.ideal_population()).abs() < self.max_deviation(graph)
    }

    #[inline]
    pub fn score_limit(&self, seed_score: f64) -> f64 {
        self.compactness_budget * seed_score
    }
}

pub fn compactness_score(plan: &Plan, mode: CompactnessMode) -> f64 {
    mode.score(plan.stats())
}

/// Post-flip population of both affected districts is within tolerance.
pub fn check_population(plan: &Plan, graph: &DualGraph, cfg: &ValidityConfig, flip: Flip) -> bool {
    let from = plan.district_of(flip.ward);
    let pop = graph.node(flip.ward).population;
    cfg.population_ok(graph, plan.district(from).population - pop)
        && cfg.population_ok(graph, plan.district(flip.to).population + pop)
}

/// The ward touches `flip.to` and its current district stays connected
/// without it.
///
/// The search stops once every same-district neighbor of the ward has been
/// reached, which is exact whenever the source district is currently
/// connected (true on every plan the chain visits).
pub fn check_contiguity(plan: &Plan, graph: &DualGraph, flip: Flip) -> bool {
    if !plan.is_boundary_pair(flip.ward, flip.to) {
        return false;
    }
    let from = plan.district_of(flip.ward);
    let targets: Vec<usize> = graph
        .neighbors(flip.ward)
        .iter()
        .map(|&(u, _)| u)
        .filter(|&u| plan.district_of(u) == from)
        .collect();
    if targets.len() <= 1 {
        return true;
    }
    let mut remaining = targets.len() - 1;
    let mut seen = HashSet::with_capacity(64);
    seen.insert(flip.ward);
    seen.insert(targets[0]);
    let mut queue = VecDeque::from([targets[0]]);
    while let Some(w) = queue.pop_front() {
        for &(u, _) in graph.neighbors(w) {
            if plan.district_of(u) == from && seen.insert(u) {
                if targets[1..].contains(&u) {
                    remaining -= 1;
                    if remaining == 0 {
                        return true;
                    }
                }
                queue.push_back(u);
            }
        }
    }
    false
}

/// Post-flip compactness score is at most `budget * seed_score`. Only the
/// two affected districts are recomputed.
pub fn check_compactness(plan: &Plan, graph: &DualGraph, cfg: &ValidityConfig, seed_score: f64, flip: Flip) -> bool {
    let from = plan.district_of(flip.ward);
    let (a, b) = plan.flip_stats(graph, flip.ward, flip.to);
    let mode = cfg.compactness_mode;
    let score: f64 = plan
        .stats()
        .iter()
        .enumerate()
        .map(|(d, s)| {
            if d == from {
                mode.district_term(&a)
            } else if d == flip.to {
                mode.district_term(&b)
            } else {
                mode.district_term(s)
            }
        })
        .sum();
    score <= cfg.score_limit(seed_score)
}

/// County and majority-minority vetoes. No ward may leave or join a frozen
/// district, and wards of intact multi-ward counties never move.
pub fn check_county_and_frozen(graph: &DualGraph, cfg: &ValidityConfig, flip: Flip) -> bool {
    let node = graph.node(flip.ward);
    if cfg.enforce_mm
        && (node.frozen || graph.is_frozen_district(node.initial_district) || graph.is_frozen_district(flip.to))
    {
        return false;
    }
    !(cfg.enforce_counties && graph.is_county_locked(flip.ward))
}

/// Conjunction of all validity predicates, cheapest first.
pub fn is_valid_flip(plan: &Plan, graph: &DualGraph, cfg: &ValidityConfig, seed_score: f64, flip: Flip) -> bool {
    if flip.ward >= graph.num_wards() || flip.to >= graph.num_districts() {
        return false;
    }
    let from = plan.district_of(flip.ward);
    if from == flip.to || plan.district(from).wards <= 1 {
        return false;
    }
    check_county_and_frozen(graph, cfg, flip)
        && plan.is_boundary_pair(flip.ward, flip.to)
        && check_population(plan, graph, cfg, flip)
        && check_compactness(plan, graph, cfg, seed_score, flip)
        && check_contiguity(plan, graph, flip)
}

/// Checks that `seed` may start a run and returns its compactness score.
///
/// The seed plan must have contiguous districts within population tolerance.
/// When it differs from the graph's initial assignment it must also keep
/// frozen districts and intact counties as they were.
pub fn check_seed(plan: &Plan, graph: &DualGraph, cfg: &ValidityConfig) -> Result<f64> {
    cfg.validate()?;
    for (d, s) in plan.stats().iter().enumerate() {
        if !cfg.population_ok(graph, s.population) {
            return Err(Error::InvalidSeedPlan(format!(
                "district {d} population {} deviates from ideal {} by at least {}",
                s.population,
                graph.ideal_population(),
                cfg.max_deviation(graph)
            )));
        }
        if !graph.district_connected(plan.assignment(), d, None) {
            return Err(Error::InvalidSeedPlan(format!("district {d} is not contiguous")));
        }
    }
    let initial = graph.initial_assignment();
    if cfg.enforce_mm {
        for w in 0..graph.num_wards() {
            let (now, was) = (plan.district_of(w), initial[w]);
            if (graph.is_frozen_district(was) || graph.is_frozen_district(now)) && now != was {
                return Err(Error::InvalidSeedPlan(format!("ward {w} changes frozen district membership")));
            }
        }
    }
    if cfg.enforce_counties {
        for county in graph.intact_counties() {
            let wards = &graph.county_groups()[county];
            if wards.iter().any(|&w| plan.district_of(w) != plan.district_of(wards[0])) {
                return Err(Error::InvalidSeedPlan(format!("county {county} is split")));
            }
        }
    }
    let score = compactness_score(plan, cfg.compactness_mode);
    if !(score <= cfg.score_limit(score)) {
        return Err(Error::InvalidSeedPlan(format!(
            "compactness budget {} is below the seed plan's own score",
            cfg.compactness_budget
        )));
    }
    Ok(score)
}
