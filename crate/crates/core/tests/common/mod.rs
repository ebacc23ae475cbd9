#![allow(dead_code)]

use hidden_geometry::{FluxMatrix, Region, RegionGraph};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random directed graph with `n` regions; each ordered pair carries flux
/// with probability `density`.
pub fn random_flux_graph<R: Rng>(rng: &mut R, n: usize, density: f64) -> (RegionGraph, Vec<Vec<f64>>) {
    let regions: Vec<Region> = (0..n)
        .map(|i| {
            Region::new(
                format!("N{i}"),
                format!("node {i}"),
                rng.random_range(-80.0..80.0),
                rng.random_range(-179.0..179.0),
                rng.random_range(10.0..1000.0),
            )
            .unwrap()
        })
        .collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    if a != b && rng.random::<f64>() < density {
                        rng.random_range(0.1..100.0)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let g = RegionGraph::new(regions, FluxMatrix::from_rows(&rows).unwrap()).unwrap();
    (g, rows)
}

/// Transition probability recomputed from raw flux rows (`rows[a][b]` is
/// the flow a -> b).
pub fn prob_from_rows(rows: &[Vec<f64>], origin: usize, dest: usize) -> f64 {
    let total: f64 = rows[origin]
        .iter()
        .enumerate()
        .filter(|(b, _)| *b != origin)
        .map(|(_, w)| w)
        .sum();
    if origin == dest || total == 0.0 {
        0.0
    } else {
        rows[origin][dest] / total
    }
}

/// Minimum effective length over all simple paths, by exhaustive DFS.
pub fn brute_force_distances(rows: &[Vec<f64>], source: usize) -> Vec<f64> {
    let n = rows.len();
    let mut best = vec![f64::INFINITY; n];
    let mut on_path = vec![false; n];
    fn dfs(rows: &[Vec<f64>], u: usize, len: f64, on_path: &mut [bool], best: &mut [f64]) {
        if len < best[u] {
            best[u] = len;
        }
        on_path[u] = true;
        for v in 0..rows.len() {
            let p = prob_from_rows(rows, u, v);
            if p > 0.0 && !on_path[v] {
                dfs(rows, v, len + 1.0 - p.ln(), on_path, best);
            }
        }
        on_path[u] = false;
    }
    dfs(rows, source, 0.0, &mut on_path, &mut best);
    best
}
