//! Seeded random region graphs for experiments and tests.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::graph::{Edge, EdgeMode, Region, RegionGraph};

/// Parameters of the random graph model.
///
/// Regions get uniformly random centroids and log-uniform populations. A
/// random spanning tree keeps the graph connected and extra undirected
/// links are added until the mean degree is reached. Link weights are
/// log-uniform over `weight_decades` decades, then all weights are scaled so
/// that the mean per-capita leaving rate equals `mobility`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub regions: usize,
    pub mean_degree: f64,
    pub population: (f64, f64),
    pub weight_decades: f64,
    pub mobility: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            regions: 50,
            mean_degree: 6.0,
            population: (5e5, 1e6),
            weight_decades: 3.0,
            mobility: 5e-3,
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

/// Random centroid, latitude uniform in area.
pub fn random_centroid<R: Rng>(rng: &mut R) -> (f64, f64) {
    let lat = (2.0 * rng.random::<f64>() - 1.0).asin().to_degrees();
    let lon = 180.0 - 360.0 * rng.random::<f64>();
    (lat.clamp(-90.0, 90.0), if lon <= -180.0 { 180.0 } else { lon })
}

/// Region table plus undirected edge list.
pub fn synthetic_inputs(cfg: &SyntheticConfig, seed: u64) -> (Vec<Region>, Vec<Edge>) {
    let mut rng = rng(seed);
    let n = cfg.regions;
    let width = n.saturating_sub(1).to_string().len().max(2);
    let regions: Vec<Region> = (0..n)
        .map(|i| {
            let (lat, lon) = random_centroid(&mut rng);
            let id = format!("R{i:0width$}");
            Region {
                name: format!("Region {i}"),
                id,
                centroid_lat: lat,
                centroid_lon: lon,
                population: log_uniform(&mut rng, cfg.population.0, cfg.population.1).round().max(1.0),
            }
        })
        .collect();

    let mut links = std::collections::BTreeSet::new();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    for k in 1..n {
        let a = order[k];
        let b = order[rng.random_range(0..k)];
        links.insert((a.min(b), a.max(b)));
    }
    let target = ((cfg.mean_degree * n as f64) / 2.0).round() as usize;
    let max_links = n * n.saturating_sub(1) / 2;
    while links.len() < target.min(max_links) {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            links.insert((a.min(b), a.max(b)));
        }
    }

    let mut edges: Vec<Edge> = links
        .into_iter()
        .map(|(a, b)| {
            let w = log_uniform(&mut rng, 1.0, 10f64.powf(cfg.weight_decades));
            Edge::new(regions[a].id.clone(), regions[b].id.clone(), w)
        })
        .collect();

    // scale so the mean per-capita leaving rate hits the target
    if n > 0 && !edges.is_empty() {
        let mut out = vec![0.0; n];
        let pos = |id: &str| regions.iter().position(|r| r.id == id).expect("known id");
        for e in &edges {
            out[pos(&e.from)] += e.weight;
            out[pos(&e.to)] += e.weight;
        }
        let mean_rate: f64 = out.iter().zip(&regions).map(|(o, r)| o / r.population).sum::<f64>() / n as f64;
        let scale = cfg.mobility / mean_rate;
        for e in &mut edges {
            e.weight *= scale;
        }
    }
    (regions, edges)
}

pub fn random_graph(cfg: &SyntheticConfig, seed: u64) -> Result<RegionGraph> {
    let (regions, edges) = synthetic_inputs(cfg, seed);
    RegionGraph::from_edges(regions, &edges, EdgeMode::Undirected)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_connected() {
        let cfg = SyntheticConfig::default();
        let a = random_graph(&cfg, 7).unwrap();
        let b = random_graph(&cfg, 7).unwrap();
        assert_eq!(a.flux(), b.flux());
        assert_eq!(a.regions(), b.regions());
        assert!(a.isolated_regions().is_empty());
        assert!(a.sink_regions().is_empty());
        let rates: f64 = (0..a.len()).map(|i| a.coupling().out_rate(i)).sum::<f64>() / a.len() as f64;
        assert!((rates - cfg.mobility).abs() < 1e-12);
    }
}
