//! Effective distances on the flux graph.
//!
//! An edge `n -> m` carrying transition probability `P = P[m][n]` has
//! effective length `1 - ln P`, so the most probable route is the shortest
//! one and lengths add along a path. Every existing edge has length at
//! least 1.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::TAU;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::arrivals::ArrivalTable;
use crate::error::{Error, Result};
use crate::fmt::{round_sig, sig};
use crate::graph::{Region, RegionGraph};

pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Effective length of an edge with transition probability `p`.
pub fn edge_length(p: f64) -> Result<f64> {
    if p > 0.0 && p <= 1.0 {
        Ok(1.0 - p.ln())
    } else {
        Err(Error::NonPositiveProbability(p))
    }
}

/// Outgoing effective edges per origin, in destination index order.
#[derive(Debug, Clone)]
pub struct EffectiveEdges {
    adj: Vec<Vec<(usize, f64)>>,
}

impl EffectiveEdges {
    pub fn new(graph: &RegionGraph) -> Self {
        let n = graph.len();
        let p = graph.transitions();
        let adj = (0..n)
            .map(|origin| {
                (0..n)
                    .filter(|&dest| dest != origin)
                    .filter_map(|dest| {
                        let prob = p.prob(dest, origin);
                        (prob > 0.0).then(|| (dest, 1.0 - prob.ln()))
                    })
                    .collect()
            })
            .collect();
        EffectiveEdges { adj }
    }

    pub fn out_edges(&self, origin: usize) -> &[(usize, f64)] {
        &self.adj[origin]
    }

    pub fn length(&self, from: usize, to: usize) -> Option<f64> {
        self.adj[from].iter().find(|(d, _)| *d == to).map(|&(_, l)| l)
    }
}

/// Shortest-path tree from one source under effective edge lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveDistanceField {
    pub source: usize,
    /// `f64::INFINITY` for unreachable regions.
    pub distance: Vec<f64>,
    pub predecessor: Vec<Option<usize>>,
}

impl EffectiveDistanceField {
    pub fn is_reachable(&self, i: usize) -> bool {
        self.distance[i].is_finite()
    }

    /// Child lists of the tree, each ordered by region index.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut children = vec![Vec::new(); self.distance.len()];
        for (v, p) in self.predecessor.iter().enumerate() {
            if let Some(p) = p {
                children[*p].push(v);
            }
        }
        children
    }

    /// Writes `source,target,effective_distance` rows for every target.
    pub fn write_csv<W: Write>(&self, graph: &RegionGraph, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["source", "target", "effective_distance"])?;
        write_field_rows(&mut w, graph, self)?;
        w.flush()?;
        Ok(())
    }
}

fn write_field_rows<W: Write>(
    w: &mut csv::Writer<W>,
    graph: &RegionGraph,
    field: &EffectiveDistanceField,
) -> Result<()> {
    let src = graph.id(field.source);
    for (t, d) in field.distance.iter().enumerate() {
        w.write_record([src, graph.id(t), &sig(*d)])?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapEntry {
    dist: f64,
    rank: usize,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    // min-heap on (dist, id rank)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.rank.cmp(&self.rank))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra from `source` following the spreading direction.
///
/// Equal-length alternatives resolve to the predecessor with the
/// lexicographically smallest region id.
pub fn shortest_path_field(graph: &RegionGraph, source: &str) -> Result<EffectiveDistanceField> {
    let s = graph.index_of(source)?;
    let edges = EffectiveEdges::new(graph);
    Ok(field_from_index(&edges, &graph.id_ranks(), s))
}

pub(crate) fn field_from_index(
    edges: &EffectiveEdges,
    rank: &[usize],
    source: usize,
) -> EffectiveDistanceField {
    let n = rank.len();
    let mut distance = vec![f64::INFINITY; n];
    let mut predecessor: Vec<Option<usize>> = vec![None; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();

    distance[source] = 0.0;
    heap.push(HeapEntry { dist: 0.0, rank: rank[source], node: source });

    while let Some(HeapEntry { dist, node: u, .. }) = heap.pop() {
        if settled[u] || dist > distance[u] {
            continue;
        }
        settled[u] = true;
        for &(v, len) in edges.out_edges(u) {
            if settled[v] {
                continue;
            }
            let nd = dist + len;
            if nd < distance[v] {
                distance[v] = nd;
                predecessor[v] = Some(u);
                heap.push(HeapEntry { dist: nd, rank: rank[v], node: v });
            } else if nd == distance[v] {
                if let Some(p) = predecessor[v] {
                    if rank[u] < rank[p] {
                        predecessor[v] = Some(u);
                    }
                }
            }
        }
    }

    EffectiveDistanceField { source, distance, predecessor }
}

/// One field per source region, computed in parallel, in region order.
pub fn all_fields(graph: &RegionGraph) -> Vec<EffectiveDistanceField> {
    let edges = EffectiveEdges::new(graph);
    let rank = graph.id_ranks();
    (0..graph.len())
        .into_par_iter()
        .map(|s| field_from_index(&edges, &rank, s))
        .collect()
}

/// Matrix of effective distances; row `s` is the field from source `s`.
/// Not symmetric in general.
pub fn all_pairs_effective(graph: &RegionGraph) -> Vec<Vec<f64>> {
    all_fields(graph).into_iter().map(|f| f.distance).collect()
}

/// Writes `source,target,effective_distance` for every ordered pair.
pub fn write_all_pairs_csv<W: Write>(graph: &RegionGraph, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["source", "target", "effective_distance"])?;
    for field in all_fields(graph) {
        write_field_rows(&mut w, graph, &field)?;
    }
    w.flush()?;
    Ok(())
}

/// Great-circle (haversine) distance between centroids in km.
pub fn geographic_distance(a: &Region, b: &Region) -> f64 {
    haversine_km(a.centroid_lat, a.centroid_lon, b.centroid_lat, b.centroid_lon)
}

pub fn haversine_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (phi1, phi2) = (lat1.to_radians(), lat2.to_radians());
    let dphi = phi2 - phi1;
    let dlambda = (lon2 - lon1).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.clamp(0.0, 1.0).sqrt().asin()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayoutNode {
    pub id: String,
    pub r: f64,
    pub theta: f64,
    /// Angular sector `[start, end)` owned by this node's subtree.
    #[serde(skip)]
    pub sector: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LayoutEdge {
    pub parent: String,
    pub child: String,
}

/// Polar embedding of a shortest-path tree: radius is effective distance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialLayout {
    pub source: String,
    pub nodes: Vec<LayoutNode>,
    pub edges: Vec<LayoutEdge>,
}

impl RadialLayout {
    pub fn to_json(&self) -> Result<String> {
        let rounded = RadialLayout {
            source: self.source.clone(),
            nodes: self
                .nodes
                .iter()
                .map(|n| LayoutNode { r: round_sig(n.r), theta: round_sig(n.theta), ..n.clone() })
                .collect(),
            edges: self.edges.clone(),
        };
        Ok(serde_json::to_string_pretty(&rounded)?)
    }

    pub fn node(&self, id: &str) -> Option<&LayoutNode> {
        self.nodes.iter().find(|n| n.id == id)
    }
}

/// Lays out the tree with the root at the origin (theta 0). Each subtree
/// gets an angular sector proportional to its leaf count, children taken
/// in region-id order; a node sits at the middle of its sector.
/// Unreachable regions are omitted.
pub fn radial_layout(field: &EffectiveDistanceField, graph: &RegionGraph) -> RadialLayout {
    let n = field.distance.len();
    let rank = graph.id_ranks();
    let mut children = field.children();
    for c in &mut children {
        c.sort_by_key(|&v| rank[v]);
    }

    // leaf counts, children before parents
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![field.source];
    while let Some(u) = stack.pop() {
        order.push(u);
        stack.extend(children[u].iter().copied());
    }
    let mut leaves = vec![0usize; n];
    for &u in order.iter().rev() {
        leaves[u] = if children[u].is_empty() {
            1
        } else {
            children[u].iter().map(|&c| leaves[c]).sum()
        };
    }

    let mut sector = vec![(0.0, 0.0); n];
    let mut theta = vec![0.0; n];
    sector[field.source] = (0.0, TAU);
    for &u in &order {
        let (start, end) = sector[u];
        let span = end - start;
        let mut cursor = start;
        for &c in &children[u] {
            let width = span * leaves[c] as f64 / leaves[u] as f64;
            sector[c] = (cursor, cursor + width);
            theta[c] = (cursor + width / 2.0).rem_euclid(TAU);
            cursor += width;
        }
    }

    let nodes = (0..n)
        .filter(|&v| field.is_reachable(v))
        .map(|v| LayoutNode {
            id: graph.id(v).to_string(),
            r: field.distance[v],
            theta: theta[v],
            sector: sector[v],
        })
        .collect();
    let edges = (0..n)
        .filter_map(|v| {
            field.predecessor[v].map(|p| LayoutEdge {
                parent: graph.id(p).to_string(),
                child: graph.id(v).to_string(),
            })
        })
        .collect();

    RadialLayout { source: graph.id(field.source).to_string(), nodes, edges }
}

/// Regions whose arrival falls in one time slice.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub index: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub regions: Vec<String>,
    /// Counts per effective-distance bin `[k * width, (k + 1) * width)`.
    pub counts: Vec<usize>,
    /// Regions in this slice that the source cannot reach.
    pub unreachable: usize,
    pub mean_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageHistogram {
    pub bin_width: f64,
    pub stages: Vec<Stage>,
}

impl StageHistogram {
    /// Writes `stage,t_start,t_end,bin_start,bin_end,count`, one row per
    /// stage and bin.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["stage", "t_start", "t_end", "bin_start", "bin_end", "count"])?;
        for s in &self.stages {
            for (k, c) in s.counts.iter().enumerate() {
                w.write_record([
                    (s.index + 1).to_string(),
                    sig(s.t_start),
                    sig(s.t_end),
                    sig(k as f64 * self.bin_width),
                    sig((k + 1) as f64 * self.bin_width),
                    c.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Splits `[min, max]` of the arrival times into `stages` equal slices (the
/// last one closed) and histograms the effective distance of the regions
/// arriving in each slice.
pub fn stage_histogram(
    field: &EffectiveDistanceField,
    graph: &RegionGraph,
    arrivals: &ArrivalTable,
    stages: usize,
    bin_width: f64,
) -> Result<StageHistogram> {
    if stages == 0 {
        return Err(Error::InvalidParameter("stage count must be at least 1".into()));
    }
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::InvalidParameter("histogram bin width must be positive".into()));
    }
    let (t_min, t_max) = arrivals.span().ok_or(Error::EmptyArrivals)?;
    let slice = (t_max - t_min) / stages as f64;

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); stages];
    for (id, t) in arrivals.iter() {
        let v = graph.index_of(id)?;
        let k = if slice > 0.0 {
            (((t - t_min) / slice).floor() as usize).min(stages - 1)
        } else {
            0
        };
        members[k].push(v);
    }

    let max_bin = members
        .iter()
        .flatten()
        .filter(|&&v| field.is_reachable(v))
        .map(|&v| (field.distance[v] / bin_width).floor() as usize)
        .max();
    let n_bins = max_bin.map_or(0, |b| b + 1);

    let stages = members
        .into_iter()
        .enumerate()
        .map(|(k, vs)| {
            let mut counts = vec![0; n_bins];
            let mut unreachable = 0;
            let mut sum = 0.0;
            let mut reached = 0;
            for &v in &vs {
                let d = field.distance[v];
                if d.is_finite() {
                    counts[(d / bin_width).floor() as usize] += 1;
                    sum += d;
                    reached += 1;
                } else {
                    unreachable += 1;
                }
            }
            Stage {
                index: k,
                t_start: t_min + k as f64 * slice,
                t_end: if k + 1 == stages { t_max } else { t_min + (k + 1) as f64 * slice },
                regions: vs.iter().map(|&v| graph.id(v).to_string()).collect(),
                counts,
                unreachable,
                mean_distance: (reached > 0).then(|| sum / reached as f64),
            }
        })
        .collect();

    Ok(StageHistogram { bin_width, stages })
}
