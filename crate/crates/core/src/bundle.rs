//! Self-describing JSON serialization of a region graph.
//!
//! The bundle stores regions and flux plus the derived matrices and
//! diagnostics for inspection. Loading re-derives everything from the flux.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::round_sig;
use crate::graph::{FluxMatrix, Region, RegionGraph};

pub const BUNDLE_FORMAT: &str = "region-graph/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub node_count: usize,
    pub edge_count: usize,
    pub sink_regions: Vec<String>,
    pub isolated_regions: Vec<String>,
    #[serde(default)]
    pub self_loops_dropped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphBundle {
    pub format: String,
    pub regions: Vec<Region>,
    /// Rows indexed by origin: `flux[a][b]` is the flow `a -> b`.
    pub flux: Vec<Vec<f64>>,
    /// `transitions[m][n]`: probability of moving to `m` from `n`.
    pub transitions: Vec<Vec<f64>>,
    /// `coupling[a][b]`: per-capita rate from `a` to `b`.
    pub coupling: Vec<Vec<f64>>,
    pub diagnostics: Diagnostics,
}

impl GraphBundle {
    pub fn from_graph(graph: &RegionGraph, self_loops_dropped: usize) -> Self {
        let n = graph.len();
        let edge_count = (0..n)
            .flat_map(|a| (0..n).map(move |b| (a, b)))
            .filter(|&(a, b)| graph.flux().flow(a, b) > 0.0)
            .count();
        GraphBundle {
            format: BUNDLE_FORMAT.into(),
            regions: graph.regions().to_vec(),
            flux: graph.flux().to_rows(),
            transitions: graph.transitions().to_rows(),
            coupling: graph.coupling().to_rows(),
            diagnostics: Diagnostics {
                node_count: n,
                edge_count,
                sink_regions: graph.sink_regions(),
                isolated_regions: graph.isolated_regions(),
                self_loops_dropped,
            },
        }
    }

    pub fn to_graph(&self) -> Result<RegionGraph> {
        if self.format != BUNDLE_FORMAT {
            return Err(Error::Parse {
                location: "bundle".into(),
                reason: format!("unsupported format `{}`", self.format),
            });
        }
        RegionGraph::new(self.regions.clone(), FluxMatrix::from_rows(&self.flux)?)
    }

    /// Pretty JSON. Derived matrices are rounded to nine significant digits;
    /// flux and regions are written exactly so a reload is lossless.
    pub fn to_json(&self) -> Result<String> {
        let round = |m: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            m.iter().map(|r| r.iter().map(|&x| round_sig(x)).collect()).collect()
        };
        let out = GraphBundle {
            transitions: round(&self.transitions),
            coupling: round(&self.coupling),
            ..self.clone()
        };
        Ok(serde_json::to_string_pretty(&out)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
