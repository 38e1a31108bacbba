//! Mutable districting plans with incrementally maintained district caches.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::DualGraph;

static NEXT_PLAN_ID: AtomicU64 = AtomicU64::new(1);

/// Cached per-district aggregates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct DistrictStats {
    pub population: f64,
    pub rep_votes: f64,
    pub dem_votes: f64,
    pub area: f64,
    /// Shared length of edges leaving the district plus the outer boundary
    /// of member wards.
    pub perimeter: f64,
    pub wards: usize,
}

/// Assignment of wards to districts.
///
/// Besides the district caches, the plan keeps, per ward, how many of its
/// neighbors sit in each district. The boundary pairs `(w, d)` are exactly
/// the entries with `d != assignment[w]` and a positive count.
#[derive(Debug)]
pub struct Plan {
    id: u64,
    assignment: Vec<usize>,
    stats: Vec<DistrictStats>,
    neighbor_counts: Vec<Vec<(usize, u32)>>,
    boundary_pairs: usize,
    version: u64,
}

impl Clone for Plan {
    /// Clones get a fresh identity so deltas taken on one copy cannot be
    /// reverted on another.
    fn clone(&self) -> Self {
        Plan {
            id: NEXT_PLAN_ID.fetch_add(1, Ordering::Relaxed),
            assignment: self.assignment.clone(),
            stats: self.stats.clone(),
            neighbor_counts: self.neighbor_counts.clone(),
            boundary_pairs: self.boundary_pairs,
            version: self.version,
        }
    }
}

/// Everything needed to undo one [`Plan::apply_flip`] exactly.
#[derive(Clone, Debug)]
pub struct FlipDelta {
    plan_id: u64,
    version: u64,
    pub ward: usize,
    pub from: usize,
    pub to: usize,
    prev_from: DistrictStats,
    prev_to: DistrictStats,
    prev_boundary_pairs: usize,
}

impl Plan {
    /// Builds a plan from `assignment`, or from the graph's initial districts
    /// when `None`. All caches come from a full recomputation.
    pub fn build(graph: &DualGraph, assignment: Option<Vec<usize>>) -> Result<Self> {
        let assignment = assignment.unwrap_or_else(|| graph.initial_assignment());
        if assignment.len() != graph.num_wards() {
            return Err(Error::AssignmentLength { expected: graph.num_wards(), found: assignment.len() });
        }
        if let Some(&d) = assignment.iter().find(|&&d| d >= graph.num_districts()) {
            return Err(Error::UnknownDistrict(d));
        }
        let stats = recompute_stats(graph, &assignment);
        if let Some(d) = stats.iter().position(|s| s.wards == 0) {
            return Err(Error::EmptyDistrict(d));
        }
        let neighbor_counts: Vec<Vec<(usize, u32)>> = (0..graph.num_wards())
            .map(|w| {
                let mut counts: Vec<(usize, u32)> = Vec::new();
                for &(u, _) in graph.neighbors(w) {
                    bump(&mut counts, assignment[u], 1);
                }
                counts
            })
            .collect();
        let boundary_pairs = neighbor_counts
            .iter()
            .enumerate()
            .map(|(w, c)| c.iter().filter(|&&(d, n)| n > 0 && d != assignment[w]).count())
            .sum();
        Ok(Plan {
            id: NEXT_PLAN_ID.fetch_add(1, Ordering::Relaxed),
            assignment,
            stats,
            neighbor_counts,
            boundary_pairs,
            version: 0,
        })
    }

    #[inline]
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    #[inline]
    pub fn district_of(&self, ward: usize) -> usize {
        self.assignment[ward]
    }

    pub fn stats(&self) -> &[DistrictStats] {
        &self.stats
    }

    #[inline]
    pub fn district(&self, d: usize) -> &DistrictStats {
        &self.stats[d]
    }

    pub fn num_districts(&self) -> usize {
        self.stats.len()
    }

    /// Number of neighbors of `ward` currently assigned to `district`.
    #[inline]
    pub fn neighbors_in(&self, ward: usize, district: usize) -> u32 {
        self.neighbor_counts[ward]
            .iter()
            .find(|&&(d, _)| d == district)
            .map_or(0, |&(_, n)| n)
    }

    /// Whether `ward` borders some ward of another district `district`.
    #[inline]
    pub fn is_boundary_pair(&self, ward: usize, district: usize) -> bool {
        district != self.assignment[ward] && self.neighbors_in(ward, district) > 0
    }

    pub fn boundary_pair_count(&self) -> usize {
        self.boundary_pairs
    }

    /// The set of `(ward, foreign district)` pairs along district boundaries.
    pub fn boundary_pairs(&self) -> BTreeSet<(usize, usize)> {
        self.neighbor_counts
            .iter()
            .enumerate()
            .flat_map(|(w, c)| {
                let own = self.assignment[w];
                c.iter().filter(move |&&(d, n)| n > 0 && d != own).map(move |&(d, _)| (w, d))
            })
            .collect()
    }

    pub fn total_perimeter(&self) -> f64 {
        self.stats.iter().map(|s| s.perimeter).sum()
    }

    /// Statistics of the source and target districts after moving `ward` to
    /// `to`, without mutating the plan. [`Plan::apply_flip`] writes exactly
    /// these values.
    pub fn flip_stats(&self, graph: &DualGraph, ward: usize, to: usize) -> (DistrictStats, DistrictStats) {
        let from = self.assignment[ward];
        let node = graph.node(ward);
        let mut a = self.stats[from];
        let mut b = self.stats[to];
        a.population -= node.population;
        a.rep_votes -= node.rep_votes;
        a.dem_votes -= node.dem_votes;
        a.area -= node.area;
        a.wards -= 1;
        b.population += node.population;
        b.rep_votes += node.rep_votes;
        b.dem_votes += node.dem_votes;
        b.area += node.area;
        b.wards += 1;

        let mut da = -node.outer_boundary;
        let mut db = node.outer_boundary;
        for &(u, len) in graph.neighbors(ward) {
            let du = self.assignment[u];
            if du == from {
                da += len;
                db += len;
            } else if du == to {
                da -= len;
                db -= len;
            } else {
                da -= len;
                db += len;
            }
        }
        a.perimeter += da;
        b.perimeter += db;
        (a, b)
    }

    /// Moves `ward` into district `to`, updating every cache in time
    /// proportional to the ward's degree.
    pub fn apply_flip(&mut self, graph: &DualGraph, ward: usize, to: usize) -> Result<FlipDelta> {
        if to >= self.stats.len() {
            return Err(Error::UnknownDistrict(to));
        }
        let from = self.assignment[ward];
        if from == to {
            return Err(Error::NoOpFlip { ward, district: to });
        }
        if self.stats[from].wards == 1 {
            return Err(Error::WouldEmptyDistrict { ward, district: from });
        }

        let (new_from, new_to) = self.flip_stats(graph, ward, to);
        let delta = FlipDelta {
            plan_id: self.id,
            version: self.version + 1,
            ward,
            from,
            to,
            prev_from: self.stats[from],
            prev_to: self.stats[to],
            prev_boundary_pairs: self.boundary_pairs,
        };
        self.stats[from] = new_from;
        self.stats[to] = new_to;

        // The ward's own pairs: `from` may become foreign, `to` stops being so.
        let mut pairs = self.boundary_pairs as isize;
        pairs += (self.neighbors_in(ward, from) > 0) as isize;
        pairs -= (self.neighbors_in(ward, to) > 0) as isize;
        for &(u, _) in graph.neighbors(ward) {
            let du = self.assignment[u];
            if bump(&mut self.neighbor_counts[u], from, -1) == 0 && du != from {
                pairs -= 1;
            }
            if bump(&mut self.neighbor_counts[u], to, 1) == 1 && du != to {
                pairs += 1;
            }
        }
        self.boundary_pairs = pairs as usize;
        self.assignment[ward] = to;
        self.version += 1;
        Ok(delta)
    }

    /// Undoes the immediately preceding flip. Restores the cached district
    /// values from the delta, so the result is bitwise identical to the state
    /// before the flip.
    pub fn revert_flip(&mut self, graph: &DualGraph, delta: &FlipDelta) -> Result<()> {
        if delta.plan_id != self.id || delta.version != self.version {
            return Err(Error::StaleDelta { delta_step: delta.version, plan_step: self.version });
        }
        for &(u, _) in graph.neighbors(delta.ward) {
            bump(&mut self.neighbor_counts[u], delta.to, -1);
            bump(&mut self.neighbor_counts[u], delta.from, 1);
        }
        self.assignment[delta.ward] = delta.from;
        self.stats[delta.from] = delta.prev_from;
        self.stats[delta.to] = delta.prev_to;
        self.boundary_pairs = delta.prev_boundary_pairs;
        self.version += 1;
        Ok(())
    }
}

/// Adds `by` to the count for `district`, returning the new count. Entries
/// that reach zero are removed.
fn bump(counts: &mut Vec<(usize, u32)>, district: usize, by: i32) -> u32 {
    match counts.iter().position(|&(d, _)| d == district) {
        Some(i) => {
            let n = (counts[i].1 as i32 + by) as u32;
            if n == 0 {
                counts.swap_remove(i);
            } else {
                counts[i].1 = n;
            }
            n
        }
        None => {
            debug_assert!(by > 0);
            counts.push((district, by as u32));
            by as u32
        }
    }
}

/// From-scratch district statistics for `assignment`.
pub fn recompute_stats(graph: &DualGraph, assignment: &[usize]) -> Vec<DistrictStats> {
    let mut stats = vec![DistrictStats::default(); graph.num_districts()];
    for node in graph.nodes() {
        let s = &mut stats[assignment[node.id]];
        s.population += node.population;
        s.rep_votes += node.rep_votes;
        s.dem_votes += node.dem_votes;
        s.area += node.area;
        s.perimeter += node.outer_boundary;
        s.wards += 1;
    }
    for e in graph.edges() {
        let (du, dv) = (assignment[e.u], assignment[e.v]);
        if du != dv {
            stats[du].perimeter += e.shared_length;
            stats[dv].perimeter += e.shared_length;
        }
    }
    stats
}

/// From-scratch boundary pair set for `assignment`.
pub fn recompute_boundary_pairs(graph: &DualGraph, assignment: &[usize]) -> BTreeSet<(usize, usize)> {
    let mut pairs = BTreeSet::new();
    for e in graph.edges() {
        let (du, dv) = (assignment[e.u], assignment[e.v]);
        if du != dv {
            pairs.insert((e.u, dv));
            pairs.insert((e.v, du));
        }
    }
    pairs
}
