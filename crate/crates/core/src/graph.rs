//! Regions and the weighted directed flux graph between them.
//!
//! All flux is stored as a single directed flow function `flow(a -> b)`,
//! row-indexed by origin. Two quantities are derived from it:
//!
//! * the transition matrix, `P[m][n] = flow(n -> m) / sum_m flow(n -> m)`,
//!   the probability of choosing destination `m` when in region `n`;
//! * the coupling matrix, `w(a -> b) = flow(a -> b) / N_a`, the per-capita
//!   rate of movement from `a` to `b`.
//!
//! Diagonal (intra-region) flux never enters either derivation.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub id: String,
    pub name: String,
    #[serde(rename = "lat")]
    pub centroid_lat: f64,
    #[serde(rename = "lon")]
    pub centroid_lon: f64,
    pub population: f64,
}

impl Region {
    pub fn new(
        id: impl Into<String>,
        name: impl Into<String>,
        lat: f64,
        lon: f64,
        population: f64,
    ) -> Result<Self> {
        let region = Region {
            id: id.into(),
            name: name.into(),
            centroid_lat: lat,
            centroid_lon: lon,
            population,
        };
        region.validate()?;
        Ok(region)
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.trim().is_empty() {
            return Err(Error::InvalidParameter("empty region id".into()));
        }
        if !valid_coordinate(self.centroid_lat, self.centroid_lon) {
            return Err(Error::InvalidCoordinate {
                id: self.id.clone(),
                lat: self.centroid_lat,
                lon: self.centroid_lon,
            });
        }
        if !(self.population > 0.0 && self.population.is_finite()) {
            return Err(Error::NonPositivePopulation {
                id: self.id.clone(),
                population: self.population,
            });
        }
        Ok(())
    }
}

/// Latitude in `[-90, 90]`, longitude in `(-180, 180]`.
pub fn valid_coordinate(lat: f64, lon: f64) -> bool {
    (-90.0..=90.0).contains(&lat) && lon > -180.0 && lon <= 180.0
}

/// Validates region records, keeping input order.
pub fn load_regions<I>(records: I) -> Result<Vec<Region>>
where
    I: IntoIterator<Item = Region>,
{
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for region in records {
        region.validate()?;
        if !seen.insert(region.id.clone()) {
            return Err(Error::DuplicateRegionId(region.id));
        }
        out.push(region);
    }
    Ok(out)
}

/// Reads a region table with header `id,name,lat,lon,population`.
pub fn read_regions_csv<R: Read>(reader: R) -> Result<Vec<Region>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut rows = Vec::new();
    for record in rdr.deserialize::<Region>() {
        rows.push(record?);
    }
    load_regions(rows)
}

/// Dense row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        SquareMatrix { n, data: vec![0.0; n * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n + col]
    }

    #[inline]
    fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.n + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.n..(row + 1) * self.n]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|r| self.row(r).to_vec()).collect()
    }
}

/// Directed flux between regions; `flow(a, b)` is the weight of `a -> b`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxMatrix(SquareMatrix);

impl FluxMatrix {
    pub fn zeros(n: usize) -> Self {
        FluxMatrix(SquareMatrix::zeros(n))
    }

    /// Builds a flux matrix from rows indexed by origin. The diagonal is
    /// zeroed.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut m = SquareMatrix::zeros(n);
        for (a, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidParameter(format!(
                    "flux row {a} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for (b, &w) in row.iter().enumerate() {
                if !(w >= 0.0 && w.is_finite()) {
                    return Err(Error::NegativeWeight {
                        from: a.to_string(),
                        to: b.to_string(),
                        weight: w,
                    });
                }
                if a != b {
                    m.set(a, b, w);
                }
            }
        }
        Ok(FluxMatrix(m))
    }

    pub fn dim(&self) -> usize {
        self.0.n
    }

    #[inline]
    pub fn flow(&self, from: usize, to: usize) -> f64 {
        if from == to {
            0.0
        } else {
            self.0.get(from, to)
        }
    }

    pub fn out_flux(&self, from: usize) -> f64 {
        (0..self.dim()).map(|to| self.flow(from, to)).sum()
    }

    pub fn in_flux(&self, to: usize) -> f64 {
        (0..self.dim()).map(|from| self.flow(from, to)).sum()
    }

    pub fn scaled(&self, c: f64) -> FluxMatrix {
        let mut m = self.0.clone();
        m.data.iter_mut().for_each(|x| *x *= c);
        FluxMatrix(m)
    }

    /// Returns a copy with `flow(from, to)` replaced.
    pub fn with_flow(&self, from: usize, to: usize, value: f64) -> Result<FluxMatrix> {
        if !(value >= 0.0 && value.is_finite()) {
            return Err(Error::NegativeWeight {
                from: from.to_string(),
                to: to.to_string(),
                weight: value,
            });
        }
        let mut m = self.0.clone();
        if from != to {
            m.set(from, to, value);
        }
        Ok(FluxMatrix(m))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.0.to_rows()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub weight: f64,
}

impl Edge {
    pub fn new(from: impl Into<String>, to: impl Into<String>, weight: f64) -> Self {
        Edge { from: from.into(), to: to.into(), weight }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeMode {
    #[default]
    Directed,
    /// Each edge contributes its weight in both directions.
    Undirected,
}

#[derive(Debug, Clone)]
pub struct FluxBuild {
    pub flux: FluxMatrix,
    /// Number of self-loop edges that were dropped.
    pub self_loops: usize,
}

/// Reads an edge list with header `from,to,weight`.
pub fn read_edges_csv<R: Read>(reader: R) -> Result<Vec<Edge>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut edges = Vec::new();
    for record in rdr.deserialize::<Edge>() {
        edges.push(record?);
    }
    Ok(edges)
}

/// Aggregates an edge list into a flux matrix over `regions`.
///
/// Parallel edges are summed; the per-pair sum is taken over sorted weights
/// so the result does not depend on edge order.
pub fn build_flux(edges: &[Edge], regions: &[Region], mode: EdgeMode) -> Result<FluxBuild> {
    let index = index_regions(regions)?;
    let lookup = |id: &str| {
        index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownRegionId(id.to_string()))
    };

    let mut pairs: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    let mut self_loops = 0;
    for e in edges {
        let a = lookup(&e.from)?;
        let b = lookup(&e.to)?;
        if !(e.weight >= 0.0 && e.weight.is_finite()) {
            return Err(Error::NegativeWeight {
                from: e.from.clone(),
                to: e.to.clone(),
                weight: e.weight,
            });
        }
        if a == b {
            self_loops += 1;
            continue;
        }
        pairs.entry((a, b)).or_default().push(e.weight);
        if mode == EdgeMode::Undirected {
            pairs.entry((b, a)).or_default().push(e.weight);
        }
    }

    let mut m = SquareMatrix::zeros(regions.len());
    for ((a, b), mut ws) in pairs {
        ws.sort_by(f64::total_cmp);
        m.set(a, b, ws.iter().sum());
    }
    if self_loops > 0 {
        log::warn!("dropped {self_loops} self-loop edge(s)");
    }
    Ok(FluxBuild { flux: FluxMatrix(m), self_loops })
}

fn index_regions(regions: &[Region]) -> Result<BTreeMap<String, usize>> {
    let mut index = BTreeMap::new();
    for (i, r) in regions.iter().enumerate() {
        if index.insert(r.id.clone(), i).is_some() {
            return Err(Error::DuplicateRegionId(r.id.clone()));
        }
    }
    Ok(index)
}

/// Column-stochastic destination probabilities, `prob(dest, origin)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    // row = destination, column = origin
    p: SquareMatrix,
    sinks: Vec<usize>,
}

impl TransitionMatrix {
    #[inline]
    pub fn prob(&self, dest: usize, origin: usize) -> f64 {
        self.p.get(dest, origin)
    }

    /// Origins with no out-flux; their columns are all zero.
    pub fn sink_columns(&self) -> &[usize] {
        &self.sinks
    }

    pub fn dim(&self) -> usize {
        self.p.n
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.p.to_rows()
    }
}

pub fn derive_transitions(flux: &FluxMatrix) -> TransitionMatrix {
    let n = flux.dim();
    let mut p = SquareMatrix::zeros(n);
    let mut sinks = Vec::new();
    for origin in 0..n {
        let total = flux.out_flux(origin);
        if total <= 0.0 {
            sinks.push(origin);
            continue;
        }
        for dest in 0..n {
            let f = flux.flow(origin, dest);
            if f > 0.0 {
                p.set(dest, origin, f / total);
            }
        }
    }
    TransitionMatrix { p, sinks }
}

/// Per-capita movement rates, `rate(from, to)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix(SquareMatrix);

impl CouplingMatrix {
    #[inline]
    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.0.get(from, to)
    }

    /// Total per-capita rate of leaving `from`.
    pub fn out_rate(&self, from: usize) -> f64 {
        self.0.row(from).iter().sum()
    }

    pub fn dim(&self) -> usize {
        self.0.n
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.0.to_rows()
    }
}

pub fn derive_coupling(flux: &FluxMatrix, regions: &[Region]) -> CouplingMatrix {
    let n = flux.dim();
    let mut w = SquareMatrix::zeros(n);
    for from in 0..n {
        let pop = regions[from].population;
        for to in 0..n {
            let f = flux.flow(from, to);
            if f > 0.0 {
                w.set(from, to, f / pop);
            }
        }
    }
    CouplingMatrix(w)
}

/// Regions plus flux, with the derived transition and coupling matrices.
///
/// Immutable once built; replacing the flux goes through
/// [`RegionGraph::with_flux`], which re-derives everything.
#[derive(Debug, Clone)]
pub struct RegionGraph {
    regions: Vec<Region>,
    index: BTreeMap<String, usize>,
    flux: FluxMatrix,
    transitions: TransitionMatrix,
    coupling: CouplingMatrix,
}

impl RegionGraph {
    pub fn new(regions: Vec<Region>, flux: FluxMatrix) -> Result<Self> {
        let regions = load_regions(regions)?;
        if flux.dim() != regions.len() {
            return Err(Error::InvalidParameter(format!(
                "flux dimension {} does not match {} regions",
                flux.dim(),
                regions.len()
            )));
        }
        let index = index_regions(&regions)?;
        let transitions = derive_transitions(&flux);
        let coupling = derive_coupling(&flux, &regions);
        Ok(RegionGraph { regions, index, flux, transitions, coupling })
    }

    pub fn from_edges(regions: Vec<Region>, edges: &[Edge], mode: EdgeMode) -> Result<Self> {
        let built = build_flux(edges, &regions, mode)?;
        RegionGraph::new(regions, built.flux)
    }

    pub fn with_flux(&self, flux: FluxMatrix) -> Result<Self> {
        RegionGraph::new(self.regions.clone(), flux)
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn region(&self, i: usize) -> &Region {
        &self.regions[i]
    }

    pub fn id(&self, i: usize) -> &str {
        &self.regions[i].id
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownRegionId(id.to_string()))
    }

    pub fn flux(&self) -> &FluxMatrix {
        &self.flux
    }

    pub fn transitions(&self) -> &TransitionMatrix {
        &self.transitions
    }

    pub fn coupling(&self) -> &CouplingMatrix {
        &self.coupling
    }

    /// Region ids whose out-flux is zero.
    pub fn sink_regions(&self) -> Vec<String> {
        self.transitions
            .sink_columns()
            .iter()
            .map(|&i| self.regions[i].id.clone())
            .collect()
    }

    /// Region ids with neither in- nor out-flux.
    pub fn isolated_regions(&self) -> Vec<String> {
        (0..self.len())
            .filter(|&i| self.flux.out_flux(i) == 0.0 && self.flux.in_flux(i) == 0.0)
            .map(|i| self.regions[i].id.clone())
            .collect()
    }

    /// Indices of regions ordered by id, for deterministic tie-breaks.
    pub(crate) fn id_ranks(&self) -> Vec<usize> {
        let mut rank = vec![0; self.len()];
        for (r, &i) in self.index.values().enumerate() {
            rank[i] = r;
        }
        rank
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn regions(ids: &[&str]) -> Vec<Region> {
        ids.iter()
            .map(|id| Region::new(*id, *id, 0.0, 0.0, 100.0).unwrap())
            .collect()
    }

    #[test]
    fn load_rejects_duplicates_and_bad_fields() {
        assert!(load_regions(Vec::new()).unwrap().is_empty());
        let dup = vec![
            Region { id: "PH".into(), name: "a".into(), centroid_lat: 0.0, centroid_lon: 0.0, population: 1.0 },
            Region { id: "PH".into(), name: "b".into(), centroid_lat: 1.0, centroid_lon: 1.0, population: 1.0 },
        ];
        assert!(matches!(load_regions(dup), Err(Error::DuplicateRegionId(id)) if id == "PH"));
        assert!(matches!(
            Region::new("X", "x", 91.0, 0.0, 1.0),
            Err(Error::InvalidCoordinate { .. })
        ));
        assert!(matches!(
            Region::new("X", "x", 0.0, -180.0, 1.0),
            Err(Error::InvalidCoordinate { .. })
        ));
        assert!(Region::new("X", "x", 0.0, 180.0, 1.0).is_ok());
        assert!(matches!(
            Region::new("X", "x", 0.0, 0.0, 0.0),
            Err(Error::NonPositivePopulation { .. })
        ));
    }

    #[test]
    fn csv_region_table() {
        let csv = "id,name,lat,lon,population\nPH,Philippines,12.8,121.7,1000\nKR,South Korea,36.5,127.9,800\n";
        let rs = read_regions_csv(csv.as_bytes()).unwrap();
        assert_eq!(rs.len(), 2);
        assert_eq!(rs[1].id, "KR");
        assert_eq!(rs[0].population, 1000.0);
    }

    #[test]
    fn duplicate_edges_are_summed() {
        let rs = regions(&["A", "B"]);
        let built = build_flux(
            &[Edge::new("A", "B", 3.0), Edge::new("A", "B", 2.0)],
            &rs,
            EdgeMode::Directed,
        )
        .unwrap();
        assert_eq!(built.flux.flow(0, 1), 5.0);
        assert_eq!(built.flux.flow(1, 0), 0.0);
    }

    #[test]
    fn self_loops_dropped_and_counted() {
        let rs = regions(&["A"]);
        let built = build_flux(&[Edge::new("A", "A", 7.0)], &rs, EdgeMode::Directed).unwrap();
        assert_eq!(built.self_loops, 1);
        assert_eq!(built.flux.flow(0, 0), 0.0);
        assert_eq!(built.flux.to_rows(), vec![vec![0.0]]);
    }

    #[test]
    fn undirected_edges_flow_both_ways() {
        let rs = regions(&["A", "B"]);
        let built = build_flux(&[Edge::new("A", "B", 4.0)], &rs, EdgeMode::Undirected).unwrap();
        assert_eq!(built.flux.flow(0, 1), 4.0);
        assert_eq!(built.flux.flow(1, 0), 4.0);
    }

    #[test]
    fn build_flux_errors() {
        let rs = regions(&["A", "B"]);
        assert!(matches!(
            build_flux(&[Edge::new("A", "Z", 1.0)], &rs, EdgeMode::Directed),
            Err(Error::UnknownRegionId(id)) if id == "Z"
        ));
        assert!(matches!(
            build_flux(&[Edge::new("A", "B", -1.0)], &rs, EdgeMode::Directed),
            Err(Error::NegativeWeight { .. })
        ));
    }

    #[test]
    fn transitions_normalize_out_flux() {
        let rs = regions(&["A", "B", "C", "D"]);
        let edges = [
            Edge::new("A", "B", 2.0),
            Edge::new("B", "A", 1.0),
            Edge::new("B", "C", 1.0),
            Edge::new("B", "D", 1.0),
        ];
        let g = RegionGraph::from_edges(rs, &edges, EdgeMode::Directed).unwrap();
        let p = g.transitions();
        // single out-flow A -> B
        assert_eq!(p.prob(1, 0), 1.0);
        for dest in [0, 2, 3] {
            assert!((p.prob(dest, 1) - 1.0 / 3.0).abs() < 1e-15);
        }
        // C and D have no out-flux
        assert_eq!(p.sink_columns(), &[2, 3]);
        assert_eq!(g.sink_regions(), vec!["C".to_string(), "D".to_string()]);
        for dest in 0..4 {
            assert_eq!(p.prob(dest, 2), 0.0);
        }
    }

    #[test]
    fn coupling_is_per_capita() {
        let rs = vec![
            Region::new("A", "A", 0.0, 0.0, 100.0).unwrap(),
            Region::new("B", "B", 0.0, 1.0, 50.0).unwrap(),
        ];
        let g = RegionGraph::from_edges(rs, &[Edge::new("A", "B", 10.0)], EdgeMode::Directed).unwrap();
        assert!((g.coupling().rate(0, 1) - 0.1).abs() < 1e-15);
        assert_eq!(g.coupling().rate(1, 0), 0.0);

        let zero = derive_coupling(&FluxMatrix::zeros(2), g.regions());
        assert!(zero.to_rows().iter().flatten().all(|&w| w == 0.0));
    }

    #[test]
    fn isolated_regions_are_reported() {
        let rs = regions(&["A", "B", "C"]);
        let g = RegionGraph::from_edges(rs, &[Edge::new("A", "B", 1.0)], EdgeMode::Directed).unwrap();
        assert_eq!(g.isolated_regions(), vec!["C".to_string()]);
    }

    #[test]
    fn with_flux_rederives() {
        let rs = regions(&["A", "B"]);
        let g = RegionGraph::from_edges(rs, &[Edge::new("A", "B", 1.0)], EdgeMode::Directed).unwrap();
        let g2 = g.with_flux(g.flux().with_flow(1, 0, 5.0).unwrap()).unwrap();
        assert_eq!(g2.transitions().prob(0, 1), 1.0);
        assert!((g2.coupling().rate(1, 0) - 0.05).abs() < 1e-15);
        assert!(g2.sink_regions().is_empty());
    }

    #[test]
    fn id_ranks_follow_lexicographic_order() {
        let rs = regions(&["c", "a", "b"]);
        let g = RegionGraph::new(rs, FluxMatrix::zeros(3)).unwrap();
        assert_eq!(g.id_ranks(), vec![2, 0, 1]);
    }
}
