//! Source inference from arrival times.
//!
//! For a candidate source, regions are placed at their effective distance
//! from it and a straight line is fitted to arrival time against that
//! distance. The true source is the candidate for which the wavefront looks
//! most linear, i.e. the one with the highest R².

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arrivals::ArrivalTable;
use crate::effdist::{self, geographic_distance, EffectiveDistanceField, EffectiveEdges};
use crate::error::{Error, Result};
use crate::fmt::{round_sig, sig};
use crate::graph::RegionGraph;

/// Default smoothing window for arrival times measured in days.
pub const DEFAULT_WINDOW_DAYS: f64 = 14.0;

/// Least-squares line `t = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
    /// Residual sum of squares (weighted when weights are used).
    pub ss_res: f64,
    pub rmse: f64,
}

/// Ordinary least squares fit of `t` against `x`.
///
/// When all `t` are equal, R² is defined as 0. When all `x` are equal the
/// slope is undefined; the fit then reports slope 0 through the mean time
/// with R² 0.
pub fn linear_fit(points: &[(f64, f64)]) -> Result<FitResult> {
    let weights = vec![1.0; points.len()];
    weighted_linear_fit(points, &weights)
}

pub fn weighted_linear_fit(points: &[(f64, f64)], weights: &[f64]) -> Result<FitResult> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints(points.len()));
    }
    if weights.len() != points.len() {
        return Err(Error::InvalidParameter("one weight per point required".into()));
    }
    if points.iter().any(|(x, t)| !x.is_finite() || !t.is_finite())
        || weights.iter().any(|w| !(*w > 0.0 && w.is_finite()))
    {
        return Err(Error::InvalidParameter("fit input must be finite with positive weights".into()));
    }

    let w_sum: f64 = weights.iter().sum();
    let x_mean = points.iter().zip(weights).map(|((x, _), w)| w * x).sum::<f64>() / w_sum;
    let t_mean = points.iter().zip(weights).map(|((_, t), w)| w * t).sum::<f64>() / w_sum;
    let (mut sxx, mut sxt, mut stt) = (0.0, 0.0, 0.0);
    for ((x, t), w) in points.iter().zip(weights) {
        let (dx, dt) = (x - x_mean, t - t_mean);
        sxx += w * dx * dx;
        sxt += w * dx * dt;
        stt += w * dt * dt;
    }

    let slope = if sxx > 0.0 { sxt / sxx } else { 0.0 };
    let intercept = t_mean - slope * x_mean;
    let ss_res: f64 = points
        .iter()
        .zip(weights)
        .map(|((x, t), w)| w * (t - slope * x - intercept).powi(2))
        .sum();
    let r_squared = if stt > 0.0 && sxx > 0.0 {
        (1.0 - ss_res / stt).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(FitResult {
        slope,
        intercept,
        r_squared,
        n_points: points.len(),
        ss_res,
        rmse: (ss_res / w_sum).sqrt(),
    })
}

/// Averages points over consecutive, non-overlapping time windows of
/// `window` length, starting at the earliest time. Each nonempty window
/// yields one `(mean x, mean t)` point.
pub fn window_smooth(points: &[(f64, f64)], window: f64) -> Result<Vec<(f64, f64)>> {
    let weighted: Vec<_> = points.iter().map(|&(x, t)| (x, t, 1.0)).collect();
    Ok(window_smooth_weighted(&weighted, window)?
        .into_iter()
        .map(|(x, t, _)| (x, t))
        .collect())
}

/// Weighted variant of [`window_smooth`]; output weights are window sums.
pub fn window_smooth_weighted(points: &[(f64, f64, f64)], window: f64) -> Result<Vec<(f64, f64, f64)>> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(window > 0.0) {
        return Err(Error::InvalidParameter("window duration must be positive".into()));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1));
    let origin = sorted[0].1;

    let mut out = Vec::new();
    let mut current: Option<(f64, f64, f64, f64)> = None; // (slot, Σwx, Σwt, Σw)
    for (x, t, w) in sorted {
        let slot = ((t - origin) / window).floor();
        match &mut current {
            Some((s, sx, st, sw)) if *s == slot => {
                *sx += w * x;
                *st += w * t;
                *sw += w;
            }
            _ => {
                if let Some((_, sx, st, sw)) = current.take() {
                    out.push((sx / sw, st / sw, sw));
                }
                current = Some((slot, w * x, w * t, w));
            }
        }
    }
    if let Some((_, sx, st, sw)) = current {
        out.push((sx / sw, st / sw, sw));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    #[default]
    Uniform,
    /// Weight each region by `ln(1 + population)`.
    LogPopulation,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FitOptions {
    /// Smoothing window in arrival-time units; `None` fits raw points.
    pub window: Option<f64>,
    pub weighting: Weighting,
}

impl FitOptions {
    pub fn raw() -> Self {
        FitOptions::default()
    }

    pub fn windowed(window: f64) -> Self {
        FitOptions { window: Some(window), ..Default::default() }
    }
}

/// `(effective distance, arrival time, weight)` for regions with both a
/// finite distance from the field's source and a recorded arrival.
fn candidate_points(
    graph: &RegionGraph,
    field: &EffectiveDistanceField,
    arrivals: &ArrivalTable,
    weighting: Weighting,
) -> Vec<(f64, f64, f64)> {
    (0..graph.len())
        .filter(|&v| field.is_reachable(v))
        .filter_map(|v| {
            let t = arrivals.get(graph.id(v))?;
            let w = match weighting {
                Weighting::Uniform => 1.0,
                Weighting::LogPopulation => (1.0 + graph.region(v).population).ln(),
            };
            Some((field.distance[v], t, w))
        })
        .collect()
}

fn score_field(
    graph: &RegionGraph,
    field: &EffectiveDistanceField,
    arrivals: &ArrivalTable,
    opts: &FitOptions,
) -> Result<FitResult> {
    let mut pts = candidate_points(graph, field, arrivals, opts.weighting);
    if pts.len() < 2 {
        return Err(Error::TooFewPoints(pts.len()));
    }
    if let Some(window) = opts.window {
        // each window mean counts once in the fit
        pts = window_smooth_weighted(&pts, window)?
            .into_iter()
            .map(|(x, t, _)| (x, t, 1.0))
            .collect();
    }
    let xy: Vec<(f64, f64)> = pts.iter().map(|&(x, t, _)| (x, t)).collect();
    let w: Vec<f64> = pts.iter().map(|&(_, _, w)| w).collect();
    weighted_linear_fit(&xy, &w)
}

/// Fit of arrival time against effective distance from `candidate`.
pub fn score_candidate(
    graph: &RegionGraph,
    arrivals: &ArrivalTable,
    candidate: &str,
    opts: &FitOptions,
) -> Result<FitResult> {
    let field = effdist::shortest_path_field(graph, candidate)?;
    score_field(graph, &field, arrivals, opts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedCandidate {
    pub id: String,
    pub fit: FitResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceRanking {
    /// Descending by R², then ascending residual sum, then id.
    pub ranked: Vec<RankedCandidate>,
    /// Candidates that could not be scored, with the reason.
    pub skipped: Vec<(String, String)>,
}

impl SourceRanking {
    pub fn best(&self) -> &RankedCandidate {
        &self.ranked[0]
    }

    /// 1-based rank of `id`, if it was scored.
    pub fn rank_of(&self, id: &str) -> Option<usize> {
        self.ranked.iter().position(|c| c.id == id).map(|p| p + 1)
    }

    /// Writes `candidate,slope,intercept,r_squared,n_points`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["candidate", "slope", "intercept", "r_squared", "n_points"])?;
        for c in &self.ranked {
            w.write_record([
                c.id.clone(),
                sig(c.fit.slope),
                sig(c.fit.intercept),
                sig(c.fit.r_squared),
                c.fit.n_points.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn ranking_order(a: &RankedCandidate, b: &RankedCandidate) -> Ordering {
    b.fit
        .r_squared
        .total_cmp(&a.fit.r_squared)
        .then_with(|| a.fit.ss_res.total_cmp(&b.fit.ss_res))
        .then_with(|| a.id.cmp(&b.id))
}

/// Scores every region as a candidate source (in parallel) and ranks them.
pub fn infer_source(graph: &RegionGraph, arrivals: &ArrivalTable, opts: &FitOptions) -> Result<SourceRanking> {
    let edges = EffectiveEdges::new(graph);
    let rank = graph.id_ranks();
    let scores: Vec<(String, Result<FitResult>)> = (0..graph.len())
        .into_par_iter()
        .map(|s| {
            let field = effdist::field_from_index(&edges, &rank, s);
            (graph.id(s).to_string(), score_field(graph, &field, arrivals, opts))
        })
        .collect();

    let mut ranked = Vec::new();
    let mut skipped = Vec::new();
    for (id, score) in scores {
        match score {
            Ok(fit) => ranked.push(RankedCandidate { id, fit }),
            Err(e) => skipped.push((id, e.to_string())),
        }
    }
    if ranked.is_empty() {
        return Err(Error::NoScorableCandidate);
    }
    ranked.sort_by(ranking_order);
    Ok(SourceRanking { ranked, skipped })
}

/// One region as seen from a chosen source.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterRow {
    pub region_id: String,
    pub geographic_km: f64,
    pub effective_distance: f64,
    pub arrival_time: Option<f64>,
}

/// Geographic distance, effective distance and arrival time of every region
/// relative to the field's source.
pub fn scatter(graph: &RegionGraph, field: &EffectiveDistanceField, arrivals: &ArrivalTable) -> Vec<ScatterRow> {
    let src = graph.region(field.source);
    (0..graph.len())
        .map(|v| ScatterRow {
            region_id: graph.id(v).to_string(),
            geographic_km: geographic_distance(src, graph.region(v)),
            effective_distance: field.distance[v],
            arrival_time: arrivals.get(graph.id(v)),
        })
        .collect()
}

/// Writes `region_id,geographic_km,effective_distance,arrival_time`; an
/// empty arrival time marks a region without arrival.
pub fn write_scatter_csv<W: Write>(rows: &[ScatterRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["region_id", "geographic_km", "effective_distance", "arrival_time"])?;
    for r in rows {
        w.write_record([
            r.region_id.clone(),
            sig(r.geographic_km),
            sig(r.effective_distance),
            r.arrival_time.map(sig).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Fit of arrival time against geographic distance from `source`.
pub fn geographic_fit(graph: &RegionGraph, arrivals: &ArrivalTable, source: &str) -> Result<FitResult> {
    let s = graph.index_of(source)?;
    let pts: Vec<(f64, f64)> = (0..graph.len())
        .filter_map(|v| {
            let t = arrivals.get(graph.id(v))?;
            Some((geographic_distance(graph.region(s), graph.region(v)), t))
        })
        .collect();
    linear_fit(&pts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub rho: f64,
    pub common_regions: usize,
}

impl Comparison {
    pub fn to_json(&self) -> Result<String> {
        let rounded = Comparison { rho: round_sig(self.rho), ..*self };
        Ok(serde_json::to_string_pretty(&rounded)?)
    }
}

/// Ranks with ties sharing their average rank (1-based).
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
    }
}

/// Spearman rank correlation over regions present in both tables. A table
/// whose common entries are all tied gives rho 0.
pub fn compare_arrivals(a: &ArrivalTable, b: &ArrivalTable) -> Result<Comparison> {
    let common: BTreeMap<&str, (f64, f64)> = a
        .iter()
        .filter_map(|(id, ta)| b.get(id).map(|tb| (id, (ta, tb))))
        .collect();
    if common.len() < 3 {
        return Err(Error::TooFewCommonRegions(common.len()));
    }
    let (xa, xb): (Vec<f64>, Vec<f64>) = common.values().copied().unzip();
    let rho = pearson(&average_ranks(&xa), &average_ranks(&xb));
    Ok(Comparison { rho, common_regions: common.len() })
}
