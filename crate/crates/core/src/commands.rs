//! End-to-end pipeline steps behind the `hgeo` binary.
//!
//! Every command first computes all of its outputs in memory and only then
//! writes them, so a failing command leaves no partial files behind.

use std::fs;
use std::path::{Path, PathBuf};

use crate::arrivals::ArrivalTable;
use crate::bundle::GraphBundle;
use crate::effdist::{radial_layout, shortest_path_field, stage_histogram};
use crate::error::{Error, Result};
use crate::graph::{build_flux, read_edges_csv, read_regions_csv, EdgeMode, RegionGraph};
use crate::infer::{self, FitOptions, Weighting, DEFAULT_WINDOW_DAYS};
use crate::ingest;
use crate::sim::{self, Scenario};
use crate::synth::{self, SyntheticConfig};

/// A named file produced by a command.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub name: &'static str,
    pub contents: String,
}

impl Output {
    fn new(name: &'static str, contents: String) -> Self {
        Output { name, contents }
    }

    fn csv(name: &'static str, write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Self> {
        let mut buf = Vec::new();
        write(&mut buf)?;
        Ok(Output::new(name, String::from_utf8(buf).expect("csv output is utf-8")))
    }
}

/// Writes outputs into `dir`, each via a temporary file and a rename.
pub fn write_outputs(dir: &Path, outputs: &[Output]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut staged = Vec::with_capacity(outputs.len());
    for out in outputs {
        let tmp = dir.join(format!(".{}.tmp", out.name));
        fs::write(&tmp, &out.contents)?;
        staged.push((tmp, dir.join(out.name)));
    }
    let mut written = Vec::new();
    for (tmp, dest) in staged {
        fs::rename(&tmp, &dest)?;
        written.push(dest);
    }
    Ok(written)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Parse {
        location: path.display().to_string(),
        reason: e.to_string(),
    })
}

pub fn load_graph(path: &Path) -> Result<RegionGraph> {
    GraphBundle::from_json(&read(path)?)?.to_graph()
}

pub fn load_arrivals(path: &Path) -> Result<ArrivalTable> {
    ArrivalTable::read_csv(read(path)?.as_bytes())
}

pub enum GraphSource {
    Files { regions: PathBuf, edges: PathBuf, mode: EdgeMode },
    Synthetic { regions: usize, seed: u64 },
}

/// `graph.json` from a region table and an edge list, or from the seeded
/// synthetic generator.
pub fn build(source: &GraphSource) -> Result<Vec<Output>> {
    let (graph, self_loops) = match source {
        GraphSource::Files { regions, edges, mode } => {
            let regions = read_regions_csv(read(regions)?.as_bytes())?;
            let edges = read_edges_csv(read(edges)?.as_bytes())?;
            let built = build_flux(&edges, &regions, *mode)?;
            (RegionGraph::new(regions, built.flux)?, built.self_loops)
        }
        GraphSource::Synthetic { regions, seed } => {
            let cfg = SyntheticConfig { regions: *regions, ..Default::default() };
            (synth::random_graph(&cfg, *seed)?, 0)
        }
    };
    let bundle = GraphBundle::from_graph(&graph, self_loops);
    for id in &bundle.diagnostics.isolated_regions {
        log::warn!("region `{id}` is isolated");
    }
    Ok(vec![Output::new("graph.json", bundle.to_json()? + "\n")])
}

/// `trajectory.csv` and `arrivals.csv` for a scenario. `epsilon` overrides
/// the scenario's threshold.
pub fn simulate(graph: &Path, scenario: &Path, epsilon: Option<f64>) -> Result<Vec<Output>> {
    let graph = load_graph(graph)?;
    let scenario: Scenario = serde_json::from_str(&read(scenario)?)?;
    let params = scenario.params()?;
    let traj = sim::simulate(&graph, &params, &scenario.seed_region, scenario.initial_infected)?;
    if traj.clamped > 0 {
        log::warn!("clamped {} slightly negative compartment values", traj.clamped);
    }
    let arrivals = sim::arrival_times(&traj, epsilon.unwrap_or(scenario.epsilon))?;
    Ok(vec![
        Output::csv("trajectory.csv", |b| traj.write_csv(b))?,
        Output::csv("arrivals.csv", |b| arrivals.write_csv(b))?,
    ])
}

pub enum ObservationSource {
    Events(PathBuf),
    Coarse { path: PathBuf, bin_width: f64, threshold: f64 },
}

/// `arrivals.csv` from an event log or from coarse cumulative series.
pub fn arrivals(graph: &Path, source: &ObservationSource) -> Result<Vec<Output>> {
    let graph = load_graph(graph)?;
    let table = match source {
        ObservationSource::Events(path) => {
            let parsed = ingest::read_events_csv(read(path)?.as_bytes())?;
            let out = ingest::first_arrivals(&parsed.events, graph.regions());
            let skipped = parsed.malformed + out.skipped;
            if skipped > 0 {
                log::warn!("skipped {skipped} event row(s)");
            }
            out.table
        }
        ObservationSource::Coarse { path, bin_width, threshold } => {
            let series = ingest::read_coarse_csv(read(path)?.as_bytes(), *bin_width)?;
            for s in &series {
                graph.index_of(&s.region_id)?;
            }
            ingest::arrivals_from_coarse(&series, *threshold)?
        }
    };
    Ok(vec![Output::csv("arrivals.csv", |b| table.write_csv(b))?])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeUnit {
    Days,
    Seconds,
}

impl TimeUnit {
    pub fn per_day(self) -> f64 {
        match self {
            TimeUnit::Days => 1.0,
            TimeUnit::Seconds => 86_400.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InferOptions {
    /// Window length in arrival-time units; defaults to 14 days.
    pub window: Option<f64>,
    pub raw: bool,
    pub time_unit: TimeUnit,
    pub weighting: Weighting,
}

impl Default for InferOptions {
    fn default() -> Self {
        InferOptions { window: None, raw: false, time_unit: TimeUnit::Days, weighting: Weighting::Uniform }
    }
}

impl InferOptions {
    pub fn fit_options(&self) -> FitOptions {
        let window = (!self.raw)
            .then(|| self.window.unwrap_or(DEFAULT_WINDOW_DAYS * self.time_unit.per_day()));
        FitOptions { window, weighting: self.weighting }
    }
}

/// `ranking.csv` plus `scatter.csv` for the best candidate.
pub fn infer(graph: &Path, arrivals: &Path, opts: &InferOptions) -> Result<Vec<Output>> {
    let graph = load_graph(graph)?;
    let table = load_arrivals(arrivals)?;
    let known = table.iter().filter(|(id, _)| graph.index_of(id).is_ok()).count();
    if known < 2 {
        return Err(Error::TooFewPoints(known));
    }
    let ranking = infer::infer_source(&graph, &table, &opts.fit_options())?;
    for (id, reason) in &ranking.skipped {
        log::info!("candidate `{id}` not scored: {reason}");
    }
    let best = shortest_path_field(&graph, &ranking.best().id)?;
    let rows = infer::scatter(&graph, &best, &table);
    Ok(vec![
        Output::csv("ranking.csv", |b| ranking.write_csv(b))?,
        Output::csv("scatter.csv", |b| infer::write_scatter_csv(&rows, b))?,
    ])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExportOptions {
    pub stages: usize,
    pub bin_width: f64,
}

impl Default for ExportOptions {
    fn default() -> Self {
        ExportOptions { stages: 4, bin_width: 1.0 }
    }
}

/// `layout.json`, `stages.csv` and `distances.csv` for one source.
pub fn export(graph: &Path, source: &str, arrivals: &Path, opts: &ExportOptions) -> Result<Vec<Output>> {
    let graph = load_graph(graph)?;
    let table = load_arrivals(arrivals)?;
    let field = shortest_path_field(&graph, source)?;
    let layout = radial_layout(&field, &graph);
    let hist = stage_histogram(&field, &graph, &table, opts.stages, opts.bin_width)?;
    Ok(vec![
        Output::new("layout.json", layout.to_json()? + "\n"),
        Output::csv("stages.csv", |b| hist.write_csv(b))?,
        Output::csv("distances.csv", |b| field.write_csv(&graph, b))?,
    ])
}

/// `comparison.json` with the rank correlation of two arrival tables.
pub fn compare(a: &Path, b: &Path) -> Result<Vec<Output>> {
    let cmp = infer::compare_arrivals(&load_arrivals(a)?, &load_arrivals(b)?)?;
    Ok(vec![Output::new("comparison.json", cmp.to_json()? + "\n")])
}
