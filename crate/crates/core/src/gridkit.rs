//! Synthetic grid instances and brute-force oracles.
//!
//! Everything here recomputes from scratch and shares no code path with the
//! incremental predicates in [`crate::constraints`] beyond the graph itself,
//! so agreement between the two is meaningful.

use std::collections::{HashMap, HashSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constraints::{CompactnessMode, Flip, ValidityConfig};
use crate::error::{Error, Result};
use crate::graph::{DualGraph, EdgeRecord, WardNode};
use crate::plan::{recompute_stats, Plan};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PopulationModel {
    Uniform(f64),
    Table(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoteModel {
    Uniform { rep: f64, dem: f64 },
    Table { rep: Vec<f64>, dem: Vec<f64> },
    /// Integer Republican votes in `0..=100` per cell, Democrats take the rest.
    Seeded(u64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedAssignment {
    /// Equal chunks of the column-wise snake order of cells. Full-column
    /// chunks are vertical bands, and every chunk is connected.
    Banded,
    Explicit(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    pub num_districts: usize,
    #[serde(default = "unit_population")]
    pub population: PopulationModel,
    #[serde(default = "even_votes")]
    pub votes: VoteModel,
    #[serde(default = "banded")]
    pub seed: SeedAssignment,
    /// County name per cell; defaults to one county per cell.
    #[serde(default)]
    pub counties: Option<Vec<String>>,
    /// Square blocks of this side share a county. Exclusive with `counties`.
    #[serde(default)]
    pub county_block: Option<usize>,
    /// Cells flagged as majority-minority members.
    #[serde(default)]
    pub frozen: Vec<usize>,
}

fn unit_population() -> PopulationModel {
    PopulationModel::Uniform(1.0)
}
fn even_votes() -> VoteModel {
    VoteModel::Uniform { rep: 1.0, dem: 1.0 }
}
fn banded() -> SeedAssignment {
    SeedAssignment::Banded
}

impl GridSpec {
    pub fn new(rows: usize, cols: usize, num_districts: usize) -> Self {
        GridSpec {
            rows,
            cols,
            num_districts,
            population: unit_population(),
            votes: even_votes(),
            seed: banded(),
            counties: None,
            county_block: None,
            frozen: Vec::new(),
        }
    }

    pub fn cells(&self) -> usize {
        self.rows * self.cols
    }

    pub fn cell(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    fn table<'a>(&self, name: &str, v: &'a [f64]) -> Result<&'a [f64]> {
        if v.len() == self.cells() {
            Ok(v)
        } else {
            Err(Error::Config(format!("{name} table has {} entries, grid has {} cells", v.len(), self.cells())))
        }
    }

    pub fn seed_assignment(&self) -> Result<Vec<usize>> {
        let n = self.cells();
        match &self.seed {
            SeedAssignment::Explicit(a) if a.len() == n => Ok(a.clone()),
            SeedAssignment::Explicit(a) => {
                Err(Error::Config(format!("explicit seed has {} entries, grid has {n} cells", a.len())))
            }
            SeedAssignment::Banded => {
                if n < self.num_districts {
                    return Err(Error::Config(format!(
                        "cannot band {n} cells into {} districts",
                        self.num_districts
                    )));
                }
                let mut a = vec![0; n];
                for c in 0..self.cols {
                    for k in 0..self.rows {
                        let r = if c % 2 == 0 { k } else { self.rows - 1 - k };
                        let order = c * self.rows + k;
                        a[self.cell(r, c)] = order * self.num_districts / n;
                    }
                }
                Ok(a)
            }
        }
    }

    /// Unit-square cells with rook adjacency, shared length 1 per interior
    /// edge and outer boundary equal to the number of exposed sides.
    pub fn generate(&self) -> Result<(DualGraph, Plan)> {
        if self.rows == 0 || self.cols == 0 || self.num_districts == 0 {
            return Err(Error::Config("grid dimensions and district count must be positive".into()));
        }
        let n = self.cells();
        let pops = match &self.population {
            PopulationModel::Uniform(p) => vec![*p; n],
            PopulationModel::Table(t) => self.table("population", t)?.to_vec(),
        };
        let (rep, dem) = match &self.votes {
            VoteModel::Uniform { rep, dem } => (vec![*rep; n], vec![*dem; n]),
            VoteModel::Table { rep, dem } => (self.table("rep", rep)?.to_vec(), self.table("dem", dem)?.to_vec()),
            VoteModel::Seeded(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let rep: Vec<f64> = (0..n).map(|_| rng.random_range(0..=100u32) as f64).collect();
                let dem = rep.iter().map(|r| 100.0 - r).collect();
                (rep, dem)
            }
        };
        let counties = match (&self.counties, self.county_block) {
            (Some(_), Some(_)) => return Err(Error::Config("give either counties or county_block, not both".into())),
            (Some(c), None) if c.len() == n => c.clone(),
            (Some(c), None) => {
                return Err(Error::Config(format!("county table has {} entries, grid has {n} cells", c.len())))
            }
            (None, Some(0)) => return Err(Error::Config("county_block must be positive".into())),
            (None, Some(b)) => {
                (0..n).map(|i| format!("b{}_{}", i / self.cols / b, i % self.cols / b)).collect()
            }
            (None, None) => (0..n).map(|i| i.to_string()).collect(),
        };
        if let Some(&f) = self.frozen.iter().find(|&&f| f >= n) {
            return Err(Error::Config(format!("frozen cell {f} is outside the grid")));
        }
        let assignment = self.seed_assignment()?;

        let mut nodes = Vec::with_capacity(n);
        let mut edges = Vec::new();
        for r in 0..self.rows {
            for c in 0..self.cols {
                let id = self.cell(r, c);
                let exposed = [r == 0, r + 1 == self.rows, c == 0, c + 1 == self.cols].iter().filter(|&&b| b).count();
                nodes.push(WardNode {
                    id,
                    population: pops[id],
                    rep_votes: rep[id],
                    dem_votes: dem[id],
                    area: 1.0,
                    outer_boundary: exposed as f64,
                    county: counties[id].clone(),
                    initial_district: assignment[id],
                    frozen: self.frozen.contains(&id),
                });
                if c + 1 < self.cols {
                    edges.push(EdgeRecord { u: id, v: id + 1, shared_length: 1.0 });
                }
                if r + 1 < self.rows {
                    edges.push(EdgeRecord { u: id, v: id + self.cols, shared_length: 1.0 });
                }
            }
        }
        let graph = DualGraph::new(nodes, edges, self.num_districts)?;
        let plan = Plan::build(&graph, None)?;
        Ok((graph, plan))
    }
}

/// Re-tests every validity property of `assignment` globally, from scratch.
pub fn oracle_plan_valid(graph: &DualGraph, assignment: &[usize], cfg: &ValidityConfig, seed_score: f64) -> bool {
    let stats = recompute_stats(graph, assignment);
    if stats.iter().any(|s| s.wards == 0) {
        return false;
    }
    let ideal = graph.total_population() / graph.num_districts() as f64;
    let max_dev = cfg.pop_tolerance_wards * (graph.total_population() / graph.num_wards() as f64);
    if stats.iter().any(|s| !((s.population - ideal).abs() < max_dev)) {
        return false;
    }
    let score: f64 = stats.iter().map(|s| cfg.compactness_mode.district_term(s)).sum();
    if !(score <= cfg.compactness_budget * seed_score) {
        return false;
    }
    if cfg.enforce_counties {
        for county in graph.intact_counties() {
            let wards = &graph.county_groups()[county];
            if wards.iter().any(|&w| assignment[w] != assignment[wards[0]]) {
                return false;
            }
        }
    }
    if cfg.enforce_mm {
        for node in graph.nodes() {
            let now = assignment[node.id];
            let frozen = graph.is_frozen_district(node.initial_district) || graph.is_frozen_district(now);
            if frozen && now != node.initial_district {
                return false;
            }
        }
    }
    (0..graph.num_districts()).all(|d| connected(graph, assignment, d))
}

fn connected(graph: &DualGraph, assignment: &[usize], d: usize) -> bool {
    let members: Vec<usize> = (0..graph.num_wards()).filter(|&w| assignment[w] == d).collect();
    let Some(&start) = members.first() else { return false };
    let mut seen = vec![false; graph.num_wards()];
    seen[start] = true;
    let mut stack = vec![start];
    let mut count = 1;
    while let Some(w) = stack.pop() {
        for &(u, _) in graph.neighbors(w) {
            if !seen[u] && assignment[u] == d {
                seen[u] = true;
                count += 1;
                stack.push(u);
            }
        }
    }
    count == members.len()
}

/// From-scratch verdict on a flip: apply it to a copy of the assignment and
/// re-test all properties globally.
pub fn oracle_valid_flip(graph: &DualGraph, plan: &Plan, cfg: &ValidityConfig, seed_score: f64, flip: Flip) -> bool {
    if flip.ward >= graph.num_wards() || flip.to >= graph.num_districts() {
        return false;
    }
    if plan.assignment()[flip.ward] == flip.to {
        return false;
    }
    let mut next = plan.assignment().to_vec();
    next[flip.ward] = flip.to;
    oracle_plan_valid(graph, &next, cfg, seed_score)
}

/// Default cap on explored partial assignments.
pub const DEFAULT_ENUMERATION_GUARD: u64 = 5_000_000;

/// Exhaustive list of valid plans, in lexicographic order of assignment.
///
/// Backtracks over wards in id order, pruning on population bounds,
/// majority-minority and county membership, a perimeter lower bound and
/// closed district components. Every complete assignment is confirmed by
/// [`oracle_plan_valid`].
pub fn enumerate_valid_plans(
    graph: &DualGraph,
    cfg: &ValidityConfig,
    seed_plan: &Plan,
    guard: u64,
) -> Result<Vec<Vec<usize>>> {
    let seed_score = cfg.compactness_mode.score(&recompute_stats(graph, seed_plan.assignment()));
    let mut e = Enumerator::new(graph, cfg, seed_score, guard);
    e.descend(0)?;
    let mut plans = e.found;
    plans.sort();
    Ok(plans)
}

struct Enumerator<'a> {
    graph: &'a DualGraph,
    cfg: &'a ValidityConfig,
    seed_score: f64,
    guard: u64,
    explored: u64,
    allowed: Vec<Vec<usize>>,
    last_neighbor: Vec<usize>,
    county_of: Vec<usize>,
    county_district: Vec<Option<usize>>,
    county_intact: Vec<bool>,
    assign: Vec<usize>,
    pop: Vec<f64>,
    count: Vec<usize>,
    closed: Vec<bool>,
    remaining_pop: Vec<f64>,
    remaining_area: Vec<f64>,
    /// Unassigned wards after each position as (population, area), densest area first.
    suffix_by_density: Vec<Vec<(f64, f64)>>,
    /// Perimeter of each district that no later assignment can remove.
    committed: Vec<f64>,
    area: Vec<f64>,
    lo: f64,
    hi: f64,
    found: Vec<Vec<usize>>,
}

const UNASSIGNED: usize = usize::MAX;

impl<'a> Enumerator<'a> {
    fn new(graph: &'a DualGraph, cfg: &'a ValidityConfig, seed_score: f64, guard: u64) -> Self {
        let n = graph.num_wards();
        let d = graph.num_districts();
        let allowed = graph
            .nodes()
            .iter()
            .map(|node| {
                if !cfg.enforce_mm {
                    (0..d).collect()
                } else if graph.is_frozen_district(node.initial_district) {
                    vec![node.initial_district]
                } else {
                    (0..d).filter(|&k| !graph.is_frozen_district(k)).collect()
                }
            })
            .collect();
        let names: Vec<&String> = graph.county_groups().keys().collect();
        let index: HashMap<&String, usize> = names.iter().enumerate().map(|(i, n)| (*n, i)).collect();
        let county_of = graph.nodes().iter().map(|node| index[&node.county]).collect();
        let county_intact = names.iter().map(|n| cfg.enforce_counties && graph.intact_counties().contains(*n)).collect();
        let mut remaining_pop = vec![0.0; n + 1];
        let mut remaining_area = vec![0.0; n + 1];
        for w in (0..n).rev() {
            remaining_pop[w] = remaining_pop[w + 1] + graph.node(w).population;
            remaining_area[w] = remaining_area[w + 1] + graph.node(w).area;
        }
        let suffix_by_density = (0..=n)
            .map(|start| {
                let mut v: Vec<(f64, f64)> = (start..n).map(|w| (graph.node(w).population, graph.node(w).area)).collect();
                v.sort_by(|a, b| (b.1 * a.0).total_cmp(&(a.1 * b.0)));
                v
            })
            .collect();
        let ideal = graph.ideal_population();
        let dev = cfg.max_deviation(graph);
        Enumerator {
            graph,
            cfg,
            seed_score,
            guard,
            explored: 0,
            allowed,
            last_neighbor: (0..n).map(|w| graph.neighbors(w).iter().map(|&(u, _)| u).max().unwrap_or(w)).collect(),
            county_of,
            county_district: vec![None; names.len()],
            county_intact,
            assign: vec![UNASSIGNED; n],
            pop: vec![0.0; d],
            count: vec![0; d],
            closed: vec![false; d],
            remaining_pop,
            remaining_area,
            suffix_by_density,
            committed: vec![0.0; d],
            area: vec![0.0; d],
            lo: ideal - dev,
            hi: ideal + dev,
            found: Vec::new(),
        }
    }

    fn descend(&mut self, w: usize) -> Result<()> {
        let n = self.graph.num_wards();
        if w == n {
            if oracle_plan_valid(self.graph, &self.assign, self.cfg, self.seed_score) {
                self.found.push(self.assign.clone());
            }
            return Ok(());
        }
        let node = self.graph.node(w);
        let choices = self.allowed[w].clone();
        for d in choices {
            if self.closed[d] || self.pop[d] + node.population >= self.hi {
                continue;
            }
            let county = self.county_of[w];
            let county_set = if self.county_intact[county] {
                match self.county_district[county] {
                    Some(cd) if cd != d => continue,
                    Some(_) => false,
                    None => true,
                }
            } else {
                false
            };
            self.explored += 1;
            if self.explored > self.guard {
                return Err(Error::EnumerationGuard(self.guard));
            }

            let saved_committed = self.committed.clone();
            let saved_area = self.area[d];
            self.committed[d] += node.outer_boundary;
            for &(u, len) in self.graph.neighbors(w) {
                if u < w && self.assign[u] != d {
                    self.committed[d] += len;
                    self.committed[self.assign[u]] += len;
                }
            }
            self.area[d] += node.area;
            self.assign[w] = d;
            self.pop[d] += node.population;
            self.count[d] += 1;
            if county_set {
                self.county_district[county] = Some(d);
            }

            let mut newly_closed = Vec::new();
            if self.feasible(w, &mut newly_closed) {
                self.descend(w + 1)?;
            }

            for k in newly_closed {
                self.closed[k] = false;
            }
            if county_set {
                self.county_district[county] = None;
            }
            self.count[d] -= 1;
            self.pop[d] -= node.population;
            self.assign[w] = UNASSIGNED;
            self.area[d] = saved_area;
            self.committed = saved_committed;
        }
        Ok(())
    }

    /// Fractional-knapsack bound on the area a district can still absorb
    /// from wards `start..` without reaching `capacity` in population.
    fn max_extra_area(&self, start: usize, capacity: f64) -> f64 {
        let mut left = capacity.max(0.0);
        let mut area = 0.0;
        for &(pop, a) in &self.suffix_by_density[start] {
            if pop <= left {
                left -= pop;
                area += a;
            } else {
                area += a * left / pop;
                break;
            }
        }
        area.min(self.remaining_area[start])
    }

    fn feasible(&mut self, w: usize, newly_closed: &mut Vec<usize>) -> bool {
        // Each district term grows with perimeter and shrinks with area, so
        // committed perimeter over the largest reachable area bounds it below.
        let slack = 1e-9 * (1.0 + self.seed_score.abs());
        let bound: f64 = (0..self.committed.len())
            .map(|k| {
                let p = self.committed[k];
                let a = self.area[k] + self.max_extra_area(w + 1, self.hi - self.pop[k]);
                match self.cfg.compactness_mode {
                    CompactnessMode::Perimeter => p,
                    CompactnessMode::L1 => p * p / a,
                    CompactnessMode::L2 => (p * p / a).powi(2),
                }
            })
            .sum();
        if bound > self.cfg.score_limit(self.seed_score) + slack {
            return false;
        }
        let deficit: f64 = self.pop.iter().map(|&p| (self.lo - p).max(0.0)).sum();
        if deficit > self.remaining_pop[w + 1] * (1.0 + 1e-12) + 1e-12 {
            return false;
        }
        let remaining_wards = self.graph.num_wards() - w - 1;
        if self.count.iter().filter(|&&c| c == 0).count() > remaining_wards {
            return false;
        }

        let mut candidates = vec![w];
        candidates.extend(self.graph.neighbors(w).iter().map(|&(u, _)| u).filter(|&u| u < w));
        for c in candidates {
            let d = self.assign[c];
            if self.closed[d] {
                continue;
            }
            let mut seen = vec![c];
            let mut queue = VecDeque::from([c]);
            let mut open = false;
            while let Some(x) = queue.pop_front() {
                if self.last_neighbor[x] > w {
                    open = true;
                    break;
                }
                for &(u, _) in self.graph.neighbors(x) {
                    if self.assign[u] == d && !seen.contains(&u) {
                        seen.push(u);
                        queue.push_back(u);
                    }
                }
            }
            if !open {
                if seen.len() != self.count[d] {
                    return false;
                }
                self.closed[d] = true;
                newly_closed.push(d);
            }
        }
        true
    }
}

/// Valid plans reachable from `seed_plan` through valid single flips, found
/// by breadth-first search with the from-scratch flip oracle. Sorted.
pub fn reachable_plans(graph: &DualGraph, cfg: &ValidityConfig, seed_plan: &Plan, max_states: usize) -> Result<Vec<Vec<usize>>> {
    let seed_score = cfg.compactness_mode.score(&recompute_stats(graph, seed_plan.assignment()));
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut queue = VecDeque::from([seed_plan.assignment().to_vec()]);
    seen.insert(seed_plan.assignment().to_vec());
    while let Some(a) = queue.pop_front() {
        let plan = Plan::build(graph, Some(a.clone()))?;
        for w in 0..graph.num_wards() {
            for d in 0..graph.num_districts() {
                if oracle_valid_flip(graph, &plan, cfg, seed_score, Flip::new(w, d)) {
                    let mut next = a.clone();
                    next[w] = d;
                    if !seen.contains(&next) {
                        if seen.len() >= max_states {
                            return Err(Error::EnumerationGuard(max_states as u64));
                        }
                        seen.insert(next.clone());
                        queue.push_back(next);
                    }
                }
            }
        }
    }
    let mut out: Vec<Vec<usize>> = seen.into_iter().collect();
    out.sort();
    Ok(out)
}
