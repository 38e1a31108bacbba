//! Polygon precinct maps to chain-ready node and edge tables.
//!
//! The pipeline runs three clean-up passes before extracting the dual graph:
//!
//! 1. island precincts are merged into the nearest mainland precinct of the
//!    same district,
//! 2. multi-part precincts are split into one precinct per part, with
//!    population and votes allocated in proportion to part area,
//! 3. precincts lying entirely inside another precinct are removed and their
//!    population and votes handed to the nearest surviving precinct of the
//!    same district.
//!
//! "Nearest" is centroid-to-centroid distance with ties broken by the lower
//! precinct id. Attribute moves are arranged so district totals are
//! conserved exactly whenever inputs are multiples of 2^-16 (integer counts
//! in particular).

pub mod geometry;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::election::{efficiency_gap, DistrictTally};
use crate::error::{Error, Result};
use crate::graph::{EdgeRow, NodeRow};
use geometry::{collinear_overlap, dist, locate_in_ring, segments, BBox, Location, Point, Polygon};

/// Boundary shared over a length at most this is not adjacency.
pub const LENGTH_EPSILON: f64 = 1e-9;

/// Granularity of proportional allocations.
const ALLOCATION_GRID: f64 = 65536.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrecinctGeometry {
    pub id: String,
    pub district: usize,
    pub county: String,
    #[serde(default)]
    pub frozen: bool,
    pub population: f64,
    pub rep_votes: f64,
    pub dem_votes: f64,
    /// Overrides island detection when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub is_island: Option<bool>,
    pub polygons: Vec<Polygon>,
}

impl PrecinctGeometry {
    pub fn area(&self) -> f64 {
        self.polygons.iter().map(Polygon::area).sum()
    }

    pub fn centroid(&self) -> Point {
        let (mut sx, mut sy, mut sa) = (0.0, 0.0, 0.0);
        for p in &self.polygons {
            let (c, a) = p.centroid();
            sx += c[0] * a;
            sy += c[1] * a;
            sa += a;
        }
        if sa > 0.0 {
            [sx / sa, sy / sa]
        } else {
            self.polygons[0].centroid().0
        }
    }

    fn bbox(&self) -> BBox {
        self.polygons.iter().map(Polygon::bbox).reduce(BBox::union).expect("validated nonempty")
    }

    fn absorb(&mut self, other: &PrecinctGeometry) {
        self.population += other.population;
        self.rep_votes += other.rep_votes;
        self.dem_votes += other.dem_votes;
    }
}

/// Input document: `{"precincts": [...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryDocument {
    pub precincts: Vec<PrecinctGeometry>,
}

impl GeometryDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: GeometryDocument = serde_json::from_str(text)?;
        doc.validate()?;
        Ok(doc)
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids = std::collections::HashSet::new();
        for p in &self.precincts {
            if !ids.insert(&p.id) {
                return Err(Error::Geometry(format!("duplicate precinct id {:?}", p.id)));
            }
            if p.polygons.is_empty() {
                return Err(Error::Geometry(format!("precinct {:?} has no polygons", p.id)));
            }
            for (field, v) in [("population", p.population), ("rep_votes", p.rep_votes), ("dem_votes", p.dem_votes)] {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::Geometry(format!("precinct {:?}: {field} must be finite and >= 0", p.id)));
                }
            }
        }
        Ok(())
    }
}

/// Per-district totals used for conservation checks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DistrictTotals {
    pub population: f64,
    pub rep_votes: f64,
    pub dem_votes: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub initial_count: usize,
    pub after_island_merge: usize,
    pub after_split: usize,
    pub after_dissolve: usize,
    pub islands_merged: usize,
    pub parts_added: usize,
    pub contained_removed: usize,
    pub totals_before: BTreeMap<usize, DistrictTotals>,
    pub totals_after: BTreeMap<usize, DistrictTotals>,
    pub efficiency_gap_before: Option<f64>,
    pub efficiency_gap_after: Option<f64>,
    /// True when every district total and the efficiency gap are bitwise
    /// identical before and after.
    pub exact: bool,
}

impl IngestReport {
    /// Fails when any district total or the efficiency gap moved by more
    /// than a relative 1e-9.
    pub fn verify(&self) -> Result<()> {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);
        if self.totals_before.keys().ne(self.totals_after.keys()) {
            return Err(Error::Conservation("district sets differ".into()));
        }
        for (d, before) in &self.totals_before {
            let after = &self.totals_after[d];
            for (name, x, y) in [
                ("population", before.population, after.population),
                ("rep_votes", before.rep_votes, after.rep_votes),
                ("dem_votes", before.dem_votes, after.dem_votes),
            ] {
                if !close(x, y) {
                    return Err(Error::Conservation(format!("district {d} {name}: {x} before, {y} after")));
                }
            }
        }
        match (self.efficiency_gap_before, self.efficiency_gap_after) {
            (Some(a), Some(b)) if close(a, b) => Ok(()),
            (None, None) => Ok(()),
            (a, b) => Err(Error::Conservation(format!("efficiency gap {a:?} before, {b:?} after"))),
        }
    }
}

pub struct IngestOutput {
    pub nodes: Vec<NodeRow>,
    pub edges: Vec<EdgeRow>,
    /// Source precinct id of each node, indexed by node id.
    pub precinct_ids: Vec<String>,
    pub report: IngestReport,
}

pub fn district_totals(precincts: &[PrecinctGeometry]) -> BTreeMap<usize, DistrictTotals> {
    let mut out: BTreeMap<usize, DistrictTotals> = BTreeMap::new();
    for p in precincts {
        let t = out.entry(p.district).or_default();
        t.population += p.population;
        t.rep_votes += p.rep_votes;
        t.dem_votes += p.dem_votes;
    }
    out
}

fn totals_gap(totals: &BTreeMap<usize, DistrictTotals>) -> Option<f64> {
    let tallies: Vec<DistrictTally> = totals.values().map(|t| DistrictTally { rep: t.rep_votes, dem: t.dem_votes }).collect();
    efficiency_gap(&tallies).ok()
}

/// Total shared boundary length between two precincts.
pub fn shared_length(a: &PrecinctGeometry, b: &PrecinctGeometry) -> f64 {
    let tol = LENGTH_EPSILON;
    let mut total = 0.0;
    for pa in &a.polygons {
        for pb in &b.polygons {
            if !pa.bbox().intersects(&pb.bbox(), tol) {
                continue;
            }
            for ra in pa.rings() {
                for rb in pb.rings() {
                    for s in segments(ra) {
                        for t in segments(rb) {
                            total += collinear_overlap(s, t, tol);
                        }
                    }
                }
            }
        }
    }
    total
}

/// All precinct pairs `(i, j)`, `i < j`, sharing more than
/// [`LENGTH_EPSILON`] of boundary.
fn adjacency(precincts: &[PrecinctGeometry]) -> Vec<(usize, usize, f64)> {
    let boxes: Vec<BBox> = precincts.iter().map(PrecinctGeometry::bbox).collect();
    let mut order: Vec<usize> = (0..precincts.len()).collect();
    order.sort_by(|&a, &b| boxes[a].min[0].total_cmp(&boxes[b].min[0]));
    let mut pairs = Vec::new();
    for (k, &i) in order.iter().enumerate() {
        for &j in &order[k + 1..] {
            if boxes[j].min[0] > boxes[i].max[0] + LENGTH_EPSILON {
                break;
            }
            if !boxes[i].intersects(&boxes[j], LENGTH_EPSILON) {
                continue;
            }
            let len = shared_length(&precincts[i], &precincts[j]);
            if len > LENGTH_EPSILON {
                pairs.push((i.min(j), i.max(j), len));
            }
        }
    }
    pairs.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    pairs
}

/// Index of the precinct in `candidates` nearest to `from` by centroid
/// distance, ties to the lower id.
fn nearest(from: Point, candidates: impl Iterator<Item = (usize, Point, String)>) -> Option<usize> {
    candidates
        .map(|(i, c, id)| (dist(from, c), id, i))
        .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)))
        .map(|(_, _, i)| i)
}

/// Merges every island into its nearest same-district mainland precinct.
/// Island geometry is dropped; only attributes move.
pub fn merge_islands(mut precincts: Vec<PrecinctGeometry>) -> Result<Vec<PrecinctGeometry>> {
    let mut touched = vec![false; precincts.len()];
    for (i, j, _) in adjacency(&precincts) {
        touched[i] = true;
        touched[j] = true;
    }
    let island: Vec<bool> = precincts.iter().zip(&touched).map(|(p, &t)| p.is_island.unwrap_or(!t)).collect();
    let mut order: Vec<usize> = (0..precincts.len()).filter(|&i| island[i]).collect();
    order.sort_by(|&a, &b| precincts[a].id.cmp(&precincts[b].id));
    for i in order {
        let c = precincts[i].centroid();
        let target = nearest(
            c,
            (0..precincts.len())
                .filter(|&j| !island[j] && precincts[j].district == precincts[i].district)
                .map(|j| (j, precincts[j].centroid(), precincts[j].id.clone())),
        )
        .ok_or_else(|| {
            Error::Geometry(format!("island {:?} has no mainland precinct in district {}", precincts[i].id, precincts[i].district))
        })?;
        let src = precincts[i].clone();
        precincts[target].absorb(&src);
    }
    let mut keep = island.iter().map(|&is| !is);
    precincts.retain(|_| keep.next().unwrap());
    Ok(precincts)
}

fn quantize(v: f64) -> f64 {
    (v * ALLOCATION_GRID).round() / ALLOCATION_GRID
}

/// Splits multi-part precincts into one precinct per part, named
/// `<id>#<part>`. All but the last part receive area-proportional shares
/// rounded to 2^-16; the last part receives the remainder.
pub fn split_multipolygons(precincts: Vec<PrecinctGeometry>) -> Result<Vec<PrecinctGeometry>> {
    let mut out = Vec::with_capacity(precincts.len());
    for p in precincts {
        for (k, poly) in p.polygons.iter().enumerate() {
            if !(poly.area() > 0.0) {
                return Err(Error::Geometry(format!("precinct {:?} part {k} has nonpositive area", p.id)));
            }
        }
        if p.polygons.len() == 1 {
            out.push(p);
            continue;
        }
        let total_area = p.area();
        let last = p.polygons.len() - 1;
        let mut given = [0.0f64; 3];
        for (k, poly) in p.polygons.iter().enumerate() {
            let attrs = [p.population, p.rep_votes, p.dem_votes];
            let share: [f64; 3] = std::array::from_fn(|a| {
                if k == last {
                    attrs[a] - given[a]
                } else {
                    quantize(attrs[a] * poly.area() / total_area).min(attrs[a] - given[a])
                }
            });
            for a in 0..3 {
                given[a] += share[a];
            }
            out.push(PrecinctGeometry {
                id: format!("{}#{k}", p.id),
                district: p.district,
                county: p.county.clone(),
                frozen: p.frozen,
                population: share[0],
                rep_votes: share[1],
                dem_votes: share[2],
                is_island: None,
                polygons: vec![poly.clone()],
            });
        }
    }
    Ok(out)
}

/// `inner` lies entirely within the exterior of some part of `outer`.
pub fn is_contained(inner: &PrecinctGeometry, outer: &PrecinctGeometry) -> bool {
    let tol = LENGTH_EPSILON;
    inner.polygons.iter().all(|ip| {
        outer.polygons.iter().any(|op| {
            op.bbox().contains(&ip.bbox(), tol)
                && ip.exterior.iter().all(|&v| locate_in_ring(v, &op.exterior, tol) != Location::Outside)
                && locate_in_ring(ip.interior_point(), &op.exterior, tol) == Location::Inside
                && ip.area() < op.area() + op.holes.iter().map(|h| geometry::ring_signed_area(h).abs()).sum::<f64>()
        })
    })
}

/// Removes precincts contained in another precinct, handing their
/// attributes to the nearest surviving precinct of the same district. A
/// container's holes covered by a removed precinct are filled.
pub fn dissolve_contained(mut precincts: Vec<PrecinctGeometry>) -> Result<Vec<PrecinctGeometry>> {
    let n = precincts.len();
    let containers: Vec<Vec<usize>> =
        (0..n).map(|i| (0..n).filter(|&j| j != i && is_contained(&precincts[i], &precincts[j])).collect()).collect();
    let contained: Vec<bool> = containers.iter().map(|c| !c.is_empty()).collect();
    for i in 0..n {
        for &j in containers[i].iter().filter(|&&j| !contained[j]) {
            let inner = precincts[i].clone();
            for poly in &mut precincts[j].polygons {
                poly.holes.retain(|h| !covered_by(h, &inner));
            }
        }
    }
    let mut order: Vec<usize> = (0..n).filter(|&i| contained[i]).collect();
    order.sort_by(|&a, &b| precincts[a].id.cmp(&precincts[b].id));
    for i in order {
        let c = precincts[i].centroid();
        let target = nearest(
            c,
            (0..n)
                .filter(|&j| !contained[j] && precincts[j].district == precincts[i].district)
                .map(|j| (j, precincts[j].centroid(), precincts[j].id.clone())),
        )
        .ok_or_else(|| {
            Error::Geometry(format!(
                "contained precinct {:?} has no surviving precinct in district {}",
                precincts[i].id, precincts[i].district
            ))
        })?;
        let src = precincts[i].clone();
        precincts[target].absorb(&src);
    }
    let mut keep = contained.iter().map(|&c| !c);
    precincts.retain(|_| keep.next().unwrap());
    Ok(precincts)
}

fn covered_by(ring: &[Point], p: &PrecinctGeometry) -> bool {
    p.polygons
        .iter()
        .any(|poly| ring.iter().all(|&v| locate_in_ring(v, &poly.exterior, LENGTH_EPSILON) != Location::Outside))
}

/// Node and edge tables of the dual graph, ordered by precinct id.
pub fn extract_graph(precincts: &[PrecinctGeometry]) -> Result<(Vec<NodeRow>, Vec<EdgeRow>, Vec<String>)> {
    let mut sorted: Vec<&PrecinctGeometry> = precincts.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let owned: Vec<PrecinctGeometry> = sorted.into_iter().cloned().collect();
    let pairs = adjacency(&owned);
    let mut shared = vec![0.0; owned.len()];
    for &(i, j, len) in &pairs {
        shared[i] += len;
        shared[j] += len;
    }
    let mut nodes = Vec::with_capacity(owned.len());
    for (i, p) in owned.iter().enumerate() {
        let area = p.area();
        let perimeter: f64 = p.polygons.iter().map(Polygon::perimeter).sum();
        if !area.is_finite() || !perimeter.is_finite() {
            return Err(Error::Geometry(format!("precinct {:?} has non-finite geometry", p.id)));
        }
        let mut outer = perimeter - shared[i];
        if outer.abs() <= LENGTH_EPSILON * perimeter.max(1.0) {
            outer = 0.0;
        }
        if outer < 0.0 {
            return Err(Error::Geometry(format!("precinct {:?} shares more boundary than its perimeter", p.id)));
        }
        nodes.push(NodeRow {
            id: i,
            pop: p.population,
            rep: p.rep_votes,
            dem: p.dem_votes,
            area,
            outer_boundary: outer,
            county: p.county.clone(),
            district: p.district,
            frozen: p.frozen,
        });
    }
    let edges = pairs.into_iter().map(|(u, v, shared_length)| EdgeRow { u, v, shared_length }).collect();
    Ok((nodes, edges, owned.into_iter().map(|p| p.id).collect()))
}

/// Full pipeline with conservation bookkeeping. Fails if conservation is
/// violated beyond round-off.
pub fn run_pipeline(doc: GeometryDocument) -> Result<IngestOutput> {
    doc.validate()?;
    let precincts = doc.precincts;
    let totals_before = district_totals(&precincts);
    let initial_count = precincts.len();

    let merged = merge_islands(precincts)?;
    let after_island_merge = merged.len();
    let split = split_multipolygons(merged)?;
    let after_split = split.len();
    let dissolved = dissolve_contained(split)?;
    let after_dissolve = dissolved.len();

    let totals_after = district_totals(&dissolved);
    let efficiency_gap_before = totals_gap(&totals_before);
    let efficiency_gap_after = totals_gap(&totals_after);
    let exact = totals_before == totals_after
        && efficiency_gap_before.map(f64::to_bits) == efficiency_gap_after.map(f64::to_bits);
    let report = IngestReport {
        initial_count,
        after_island_merge,
        after_split,
        after_dissolve,
        islands_merged: initial_count - after_island_merge,
        parts_added: after_split - after_island_merge,
        contained_removed: after_split - after_dissolve,
        totals_before,
        totals_after,
        efficiency_gap_before,
        efficiency_gap_after,
        exact,
    };
    report.verify()?;
    let (nodes, edges, precinct_ids) = extract_graph(&dissolved)?;
    Ok(IngestOutput { nodes, edges, precinct_ids, report })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq(x: f64, y: f64, s: f64) -> Polygon {
        Polygon { exterior: vec![[x, y], [x + s, y], [x + s, y + s], [x, y + s]], holes: vec![] }
    }

    fn precinct(id: &str, district: usize, polys: Vec<Polygon>, pop: f64) -> PrecinctGeometry {
        PrecinctGeometry {
            id: id.into(),
            district,
            county: "c".into(),
            frozen: false,
            population: pop,
            rep_votes: pop / 2.0,
            dem_votes: pop / 4.0,
            is_island: None,
            polygons: polys,
        }
    }

    #[test]
    fn two_by_two_grid_graph() {
        let ps = vec![
            precinct("a", 0, vec![sq(0.0, 0.0, 1.0)], 1.0),
            precinct("b", 0, vec![sq(1.0, 0.0, 1.0)], 1.0),
            precinct("c", 1, vec![sq(0.0, 1.0, 1.0)], 1.0),
            precinct("d", 1, vec![sq(1.0, 1.0, 1.0)], 1.0),
        ];
        let (nodes, edges, ids) = extract_graph(&ps).unwrap();
        assert_eq!(ids, vec!["a", "b", "c", "d"]);
        assert_eq!(nodes.len(), 4);
        assert!(nodes.iter().all(|n| n.outer_boundary == 2.0 && n.area == 1.0));
        let pairs: Vec<(usize, usize, f64)> = edges.iter().map(|e| (e.u, e.v, e.shared_length)).collect();
        assert_eq!(pairs, vec![(0, 1, 1.0), (0, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0)]);
    }

    #[test]
    fn corner_touch_is_not_adjacency() {
        let ps = vec![precinct("a", 0, vec![sq(0.0, 0.0, 1.0)], 1.0), precinct("b", 0, vec![sq(1.0, 1.0, 1.0)], 1.0)];
        let (_, edges, _) = extract_graph(&ps).unwrap();
        assert!(edges.is_empty());
    }

    #[test]
    fn parallel_segments_aggregate() {
        // `b` is split along the shared side into two segments.
        let a = precinct("a", 0, vec![sq(0.0, 0.0, 2.0)], 1.0);
        let b = precinct(
            "b",
            0,
            vec![Polygon { exterior: vec![[2.0, 0.0], [3.0, 0.0], [3.0, 2.0], [2.0, 2.0], [2.0, 0.5]], holes: vec![] }],
            1.0,
        );
        let (nodes, edges, _) = extract_graph(&[a, b]).unwrap();
        assert_eq!(edges.len(), 1);
        assert_eq!(edges[0].shared_length, 2.0);
        assert_eq!(nodes[0].outer_boundary, 6.0);
    }

    #[test]
    fn split_is_area_proportional_with_remainder() {
        let p = precinct("m", 0, vec![sq(0.0, 0.0, 1.0), sq(5.0, 5.0, 3.0_f64.sqrt())], 100.0);
        let parts = split_multipolygons(vec![p]).unwrap();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].population, 25.0);
        assert_eq!(parts[1].population, 75.0);
        assert_eq!(parts[0].id, "m#0");

        let odd = precinct("o", 0, vec![sq(0.0, 0.0, 1.0), sq(2.0, 0.0, 1.0), sq(4.0, 0.0, 1.0)], 7.0);
        let parts = split_multipolygons(vec![odd]).unwrap();
        assert_eq!(parts.iter().map(|p| p.population).sum::<f64>(), 7.0);
        assert_eq!(parts.iter().map(|p| p.rep_votes).sum::<f64>(), 3.5);
    }

    #[test]
    fn split_rejects_degenerate_part() {
        let flat = Polygon { exterior: vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], holes: vec![] };
        let p = precinct("z", 0, vec![sq(0.0, 0.0, 1.0), flat], 1.0);
        assert!(matches!(split_multipolygons(vec![p]), Err(Error::Geometry(_))));
    }

    #[test]
    fn island_goes_to_nearest_mainland() {
        let ps = vec![
            precinct("a", 0, vec![sq(0.0, 0.0, 1.0)], 10.0),
            precinct("b", 0, vec![sq(1.0, 0.0, 1.0)], 10.0),
            precinct("far", 1, vec![sq(2.0, 0.0, 1.0)], 10.0),
            precinct("isle", 0, vec![sq(5.0, 0.0, 0.5)], 4.0),
        ];
        // Distances from the island: b at 3.75, far (other district) at 2.75.
        let out = merge_islands(ps).unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(out[1].population, 14.0);
        assert_eq!(out[2].population, 10.0);
    }

    #[test]
    fn no_islands_is_identity() {
        let ps = vec![precinct("a", 0, vec![sq(0.0, 0.0, 1.0)], 1.0), precinct("b", 0, vec![sq(1.0, 0.0, 1.0)], 1.0)];
        assert_eq!(merge_islands(ps.clone()).unwrap(), ps);
        assert_eq!(dissolve_contained(ps.clone()).unwrap(), ps);
    }

    #[test]
    fn island_without_mainland_errors() {
        let ps = vec![precinct("a", 0, vec![sq(0.0, 0.0, 1.0)], 1.0), precinct("b", 0, vec![sq(1.0, 0.0, 1.0)], 1.0), precinct("i", 1, vec![sq(9.0, 9.0, 1.0)], 1.0)];
        assert!(matches!(merge_islands(ps), Err(Error::Geometry(m)) if m.contains("\"i\"")));
    }

    #[test]
    fn doughnut_hole_is_dissolved() {
        let ring = Polygon { exterior: sq(0.0, 0.0, 3.0).exterior, holes: vec![sq(1.0, 1.0, 1.0).exterior] };
        let annulus = precinct("annulus", 0, vec![ring], 8.0);
        let hole = precinct("hole", 0, vec![sq(1.0, 1.0, 1.0)], 2.0);
        assert!(is_contained(&hole, &annulus));
        assert!(!is_contained(&annulus, &hole));
        let out = dissolve_contained(vec![annulus, hole]).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].population, 10.0);
    }

    #[test]
    fn neighbors_are_not_contained() {
        let a = precinct("a", 0, vec![sq(0.0, 0.0, 1.0)], 1.0);
        let b = precinct("b", 0, vec![sq(1.0, 0.0, 1.0)], 1.0);
        assert!(!is_contained(&a, &b) && !is_contained(&b, &a));
    }
}
