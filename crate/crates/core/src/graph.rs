//! The immutable dual multigraph of a ward map.
//!
//! Wards are nodes; two wards are joined by an edge when they share a
//! boundary of positive length. Parallel boundary segments between the same
//! pair of wards are aggregated into one [`EdgeRecord`] whose
//! `shared_length` is their sum.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};

/// One ward of the map.
#[derive(Clone, Debug, PartialEq)]
pub struct WardNode {
    pub id: usize,
    pub population: f64,
    pub rep_votes: f64,
    pub dem_votes: f64,
    pub area: f64,
    /// Length of this ward's boundary lying on the outer border of the map.
    pub outer_boundary: f64,
    pub county: String,
    pub initial_district: usize,
    /// Member of a majority-minority district whose membership is frozen.
    pub frozen: bool,
}

/// Aggregated shared boundary between two wards.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeRecord {
    pub u: usize,
    pub v: usize,
    pub shared_length: f64,
}

#[derive(Clone, Debug)]
pub struct DualGraph {
    nodes: Vec<WardNode>,
    edges: Vec<EdgeRecord>,
    num_districts: usize,
    /// Per ward, `(neighbor, shared_length)` sorted by neighbor id.
    adjacency: Vec<Vec<(usize, f64)>>,
    county_groups: BTreeMap<String, Vec<usize>>,
    intact_counties: BTreeSet<String>,
    /// Ward belongs to an intact county holding at least two wards.
    county_locked: Vec<bool>,
    frozen_districts: Vec<bool>,
    total_population: f64,
}

impl DualGraph {
    /// Validates the tables and derives adjacency, county and frozen-district
    /// bookkeeping. Intact counties are always recomputed from
    /// `initial_district`.
    pub fn new(nodes: Vec<WardNode>, edges: Vec<EdgeRecord>, num_districts: usize) -> Result<Self> {
        if num_districts == 0 {
            return Err(Error::Config("num_districts must be positive".into()));
        }
        for (row, node) in nodes.iter().enumerate() {
            if node.id != row {
                return Err(Error::NonDenseWardId { expected: nodes.len(), found: node.id, row });
            }
            check_attr(row, "population", node.population, false)?;
            check_attr(row, "rep_votes", node.rep_votes, false)?;
            check_attr(row, "dem_votes", node.dem_votes, false)?;
            check_attr(row, "outer_boundary", node.outer_boundary, false)?;
            check_attr(row, "area", node.area, true)?;
            if node.initial_district >= num_districts {
                return Err(Error::UnknownDistrict(node.initial_district));
            }
        }

        let n = nodes.len();
        let mut adjacency = vec![Vec::new(); n];
        let mut seen = HashSet::with_capacity(edges.len());
        for e in &edges {
            if e.u >= n {
                return Err(Error::UnknownWard(e.u));
            }
            if e.v >= n {
                return Err(Error::UnknownWard(e.v));
            }
            if e.u == e.v {
                return Err(Error::SelfLoop(e.u));
            }
            if !(e.shared_length.is_finite() && e.shared_length > 0.0) {
                return Err(Error::NonpositiveSharedLength(e.u, e.v, e.shared_length));
            }
            if !seen.insert((e.u.min(e.v), e.u.max(e.v))) {
                return Err(Error::DuplicateEdge(e.u, e.v));
            }
            adjacency[e.u].push((e.v, e.shared_length));
            adjacency[e.v].push((e.u, e.shared_length));
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(v, _)| v);
        }

        let mut present = vec![false; num_districts];
        for node in &nodes {
            present[node.initial_district] = true;
        }
        if let Some(d) = present.iter().position(|p| !p) {
            return Err(Error::EmptyDistrict(d));
        }

        let mut county_groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for node in &nodes {
            county_groups.entry(node.county.clone()).or_default().push(node.id);
        }
        let intact_counties: BTreeSet<String> = county_groups
            .iter()
            .filter(|(_, wards)| {
                let d = nodes[wards[0]].initial_district;
                wards.iter().all(|&w| nodes[w].initial_district == d)
            })
            .map(|(c, _)| c.clone())
            .collect();
        let county_locked = nodes
            .iter()
            .map(|node| intact_counties.contains(&node.county) && county_groups[&node.county].len() >= 2)
            .collect();

        let mut frozen_districts = vec![false; num_districts];
        for node in nodes.iter().filter(|n| n.frozen) {
            frozen_districts[node.initial_district] = true;
        }
        let total_population = nodes.iter().map(|n| n.population).sum();

        let graph = DualGraph {
            nodes,
            edges,
            num_districts,
            adjacency,
            county_groups,
            intact_counties,
            county_locked,
            frozen_districts,
            total_population,
        };
        let initial: Vec<usize> = graph.nodes.iter().map(|n| n.initial_district).collect();
        for d in 0..num_districts {
            if !graph.district_connected(&initial, d, None) {
                return Err(Error::DisconnectedDistrict(d));
            }
        }
        Ok(graph)
    }

    /// Reads the `nodes` and `edges` tables (see [`NodeRow`] and [`EdgeRow`]).
    pub fn from_csv_readers<N: Read, E: Read>(nodes: N, edges: E, num_districts: usize) -> Result<Self> {
        let mut node_list = Vec::new();
        for (row, rec) in csv::Reader::from_reader(nodes).deserialize::<NodeRow>().enumerate() {
            let rec = rec.map_err(|e| Error::Parse { source_name: "nodes".into(), message: format!("row {row}: {e}") })?;
            node_list.push(rec.into());
        }
        let mut edge_list = Vec::new();
        for (row, rec) in csv::Reader::from_reader(edges).deserialize::<EdgeRow>().enumerate() {
            let rec = rec.map_err(|e| Error::Parse { source_name: "edges".into(), message: format!("row {row}: {e}") })?;
            edge_list.push(EdgeRecord { u: rec.u, v: rec.v, shared_length: rec.shared_length });
        }
        DualGraph::new(node_list, edge_list, num_districts)
    }

    pub fn from_csv_paths(nodes: &Path, edges: &Path, num_districts: usize) -> Result<Self> {
        let n = std::fs::File::open(nodes)?;
        let e = std::fs::File::open(edges)?;
        Self::from_csv_readers(n, e, num_districts)
    }

    pub fn write_nodes_csv<W: Write>(&self, out: W) -> Result<()> {
        write_node_rows(self.nodes.iter().map(NodeRow::from), out)
    }

    pub fn write_edges_csv<W: Write>(&self, out: W) -> Result<()> {
        write_edge_rows(self.edges.iter().map(|e| EdgeRow { u: e.u, v: e.v, shared_length: e.shared_length }), out)
    }

    pub fn nodes(&self) -> &[WardNode] {
        &self.nodes
    }

    pub fn node(&self, ward: usize) -> &WardNode {
        &self.nodes[ward]
    }

    pub fn edges(&self) -> &[EdgeRecord] {
        &self.edges
    }

    pub fn num_wards(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_districts(&self) -> usize {
        self.num_districts
    }

    #[inline]
    pub fn neighbors(&self, ward: usize) -> &[(usize, f64)] {
        &self.adjacency[ward]
    }

    pub fn county_groups(&self) -> &BTreeMap<String, Vec<usize>> {
        &self.county_groups
    }

    pub fn intact_counties(&self) -> &BTreeSet<String> {
        &self.intact_counties
    }

    /// True when the ward sits in an intact county that has two or more wards.
    #[inline]
    pub fn is_county_locked(&self, ward: usize) -> bool {
        self.county_locked[ward]
    }

    /// A district is frozen when it contains a frozen ward in the seed assignment.
    #[inline]
    pub fn is_frozen_district(&self, district: usize) -> bool {
        self.frozen_districts[district]
    }

    pub fn total_population(&self) -> f64 {
        self.total_population
    }

    /// Ideal district population, total population over district count.
    pub fn ideal_population(&self) -> f64 {
        self.total_population / self.num_districts as f64
    }

    /// Average ward population, total population over ward count.
    pub fn mean_ward_population(&self) -> f64 {
        self.total_population / self.nodes.len() as f64
    }

    pub fn initial_assignment(&self) -> Vec<usize> {
        self.nodes.iter().map(|n| n.initial_district).collect()
    }

    /// Whether the wards of `district` under `assignment`, optionally
    /// excluding one ward, induce a connected subgraph. An empty set counts
    /// as connected.
    pub fn district_connected(&self, assignment: &[usize], district: usize, exclude: Option<usize>) -> bool {
        let members: Vec<usize> = (0..self.nodes.len())
            .filter(|&w| assignment[w] == district && Some(w) != exclude)
            .collect();
        let Some(&start) = members.first() else {
            return true;
        };
        let mut seen = vec![false; self.nodes.len()];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut reached = 1;
        while let Some(w) = queue.pop_front() {
            for &(u, _) in &self.adjacency[w] {
                if !seen[u] && assignment[u] == district && Some(u) != exclude {
                    seen[u] = true;
                    reached += 1;
                    queue.push_back(u);
                }
            }
        }
        reached == members.len()
    }
}

fn check_attr(ward: usize, field: &'static str, value: f64, strictly_positive: bool) -> Result<()> {
    let ok = value.is_finite() && if strictly_positive { value > 0.0 } else { value >= 0.0 };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidAttribute {
            ward,
            field,
            requirement: if strictly_positive { "finite and > 0" } else { "finite and >= 0" },
            value,
        })
    }
}

/// Row of the nodes table:
/// `id,pop,rep,dem,area,outer_boundary,county,district,frozen`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct NodeRow {
    pub id: usize,
    pub pop: f64,
    pub rep: f64,
    pub dem: f64,
    pub area: f64,
    pub outer_boundary: f64,
    pub county: String,
    pub district: usize,
    #[serde(deserialize_with = "de_flag", serialize_with = "ser_flag")]
    pub frozen: bool,
}

/// Row of the edges table: `u,v,shared_length`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct EdgeRow {
    pub u: usize,
    pub v: usize,
    pub shared_length: f64,
}

impl From<NodeRow> for WardNode {
    fn from(r: NodeRow) -> Self {
        WardNode {
            id: r.id,
            population: r.pop,
            rep_votes: r.rep,
            dem_votes: r.dem,
            area: r.area,
            outer_boundary: r.outer_boundary,
            county: r.county,
            initial_district: r.district,
            frozen: r.frozen,
        }
    }
}

impl From<&WardNode> for NodeRow {
    fn from(n: &WardNode) -> Self {
        NodeRow {
            id: n.id,
            pop: n.population,
            rep: n.rep_votes,
            dem: n.dem_votes,
            area: n.area,
            outer_boundary: n.outer_boundary,
            county: n.county.clone(),
            district: n.initial_district,
            frozen: n.frozen,
        }
    }
}

pub fn write_node_rows<W: Write>(rows: impl IntoIterator<Item = NodeRow>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_edge_rows<W: Write>(rows: impl IntoIterator<Item = EdgeRow>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn de_flag<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<bool, D::Error> {
    let s = String::deserialize(d)?;
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" | "" => Ok(false),
        other => Err(serde::de::Error::custom(format!("invalid frozen flag {other:?}"))),
    }
}

fn ser_flag<S: serde::Serializer>(v: &bool, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(if *v { "true" } else { "false" })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_nodes(districts: &[usize]) -> Vec<WardNode> {
        districts
            .iter()
            .enumerate()
            .map(|(i, &d)| WardNode {
                id: i,
                population: 1.0,
                rep_votes: 1.0,
                dem_votes: 1.0,
                area: 1.0,
                outer_boundary: 1.0,
                county: format!("c{i}"),
                initial_district: d,
                frozen: false,
            })
            .collect()
    }

    fn path_edges(n: usize) -> Vec<EdgeRecord> {
        (0..n - 1).map(|i| EdgeRecord { u: i, v: i + 1, shared_length: 1.0 }).collect()
    }

    #[test]
    fn singleton_counties_are_intact() {
        let g = DualGraph::new(path_nodes(&[0, 0, 1, 1]), path_edges(4), 2).unwrap();
        assert_eq!(g.intact_counties().len(), 4);
        assert!((0..4).all(|w| !g.is_county_locked(w)));
    }

    #[test]
    fn interleaved_path_districts_are_disconnected() {
        let err = DualGraph::new(path_nodes(&[0, 1, 0, 1]), path_edges(4), 2).unwrap_err();
        assert!(matches!(err, Error::DisconnectedDistrict(0)));
        assert_eq!(err.to_string(), "district 0 is not contiguous");
    }

    #[test]
    fn rejects_duplicate_edges_either_orientation() {
        let mut edges = path_edges(4);
        edges.push(EdgeRecord { u: 1, v: 0, shared_length: 2.0 });
        assert!(matches!(
            DualGraph::new(path_nodes(&[0, 0, 1, 1]), edges, 2),
            Err(Error::DuplicateEdge(1, 0))
        ));
    }

    #[test]
    fn rejects_unknown_ward_and_bad_area() {
        let mut edges = path_edges(4);
        edges.push(EdgeRecord { u: 0, v: 9, shared_length: 1.0 });
        assert!(matches!(DualGraph::new(path_nodes(&[0, 0, 1, 1]), edges, 2), Err(Error::UnknownWard(9))));

        let mut nodes = path_nodes(&[0, 0, 1, 1]);
        nodes[2].area = 0.0;
        assert!(matches!(
            DualGraph::new(nodes, path_edges(4), 2),
            Err(Error::InvalidAttribute { ward: 2, field: "area", .. })
        ));
    }

    #[test]
    fn rejects_missing_district() {
        assert!(matches!(
            DualGraph::new(path_nodes(&[0, 0, 0, 0]), path_edges(4), 2),
            Err(Error::EmptyDistrict(1))
        ));
    }

    #[test]
    fn county_spanning_two_districts_is_not_intact() {
        let mut nodes = path_nodes(&[0, 0, 1, 1]);
        nodes[1].county = "shared".into();
        nodes[2].county = "shared".into();
        nodes[3].county = "c0".into();
        nodes[0].county = "whole".into();
        let g = DualGraph::new(nodes, path_edges(4), 2).unwrap();
        assert!(!g.intact_counties().contains("shared"));
        assert!(g.intact_counties().contains("whole"));
        assert!(g.intact_counties().contains("c0"));
        assert!(!g.is_county_locked(0));
    }

    #[test]
    fn csv_round_trip_and_flag_parsing() {
        let nodes = "id,pop,rep,dem,area,outer_boundary,county,district,frozen\n\
                     0,10,6,4,1.5,2,A,0,0\n1,12.5,3,9,2,2,A,0,true\n2,7,1,1,1,3,B,1,false\n";
        let edges = "u,v,shared_length\n0,1,1\n1,2,0.5\n";
        let g = DualGraph::from_csv_readers(nodes.as_bytes(), edges.as_bytes(), 2).unwrap();
        assert_eq!(g.num_wards(), 3);
        assert!(g.node(1).frozen);
        assert!(g.is_frozen_district(0));
        assert!(!g.is_frozen_district(1));
        assert!(g.is_county_locked(0));
        assert_eq!(g.neighbors(1), &[(0, 1.0), (2, 0.5)]);

        let mut n_out = Vec::new();
        let mut e_out = Vec::new();
        g.write_nodes_csv(&mut n_out).unwrap();
        g.write_edges_csv(&mut e_out).unwrap();
        let g2 = DualGraph::from_csv_readers(n_out.as_slice(), e_out.as_slice(), 2).unwrap();
        assert_eq!(g.nodes(), g2.nodes());
        assert_eq!(g.edges(), g2.edges());
    }

    #[test]
    fn non_dense_ids_are_rejected() {
        let nodes = "id,pop,rep,dem,area,outer_boundary,county,district,frozen\n0,1,1,1,1,1,A,0,0\n2,1,1,1,1,1,A,0,0\n";
        let err = DualGraph::from_csv_readers(nodes.as_bytes(), "u,v,shared_length\n".as_bytes(), 1).unwrap_err();
        assert!(matches!(err, Error::NonDenseWardId { found: 2, row: 1, .. }));
    }
}
