//! Deterministic meta-population SI dynamics.
//!
//! Each region is well mixed with local infection `alpha * I * S / N` and
//! removal `beta * I`. Both compartments move between regions at the
//! per-capita rates of the coupling matrix:
//!
//! ```text
//! dS_n = -a I_n S_n / N_n             + sum_m (w(m->n) S_m - w(n->m) S_n)
//! dI_n = -b I_n + a I_n S_n / N_n     + sum_m (w(m->n) I_m - w(n->m) I_n)
//! ```
//!
//! Integration is classical fixed-step RK4.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::arrivals::{ArrivalTable, Provenance};
use crate::error::{Error, Result};
use crate::fmt::sig;
use crate::graph::RegionGraph;

pub const DEFAULT_EPSILON: f64 = 0.01;

/// Compartments may dip this far below zero (relative to N) before a step
/// is rejected; shallower undershoot is clamped.
pub const NEGATIVE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SIParams {
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    pub dt: f64,
    pub horizon: f64,
}

impl SIParams {
    pub fn new(alpha: f64, beta: f64, dt: f64, horizon: f64) -> Result<Self> {
        let p = SIParams { alpha, beta, dt, horizon };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be a finite value >= 0");
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad("beta must be a finite value >= 0");
        }
        if !(self.dt > 0.0 && self.horizon.is_finite() && self.dt <= self.horizon) {
            return bad("need 0 < dt <= horizon");
        }
        Ok(())
    }

    /// Number of integration steps needed to reach the horizon.
    pub fn steps(&self) -> usize {
        let exact = self.horizon / self.dt;
        let rounded = exact.round();
        if (exact - rounded).abs() <= 1e-9 * exact.max(1.0) {
            rounded as usize
        } else {
            exact.ceil() as usize
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub s: Vec<f64>,
    pub i: Vec<f64>,
}

impl SimState {
    pub fn zeros(n: usize) -> Self {
        SimState { s: vec![0.0; n], i: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.s.iter().chain(&self.i).sum()
    }

    fn axpy(&self, h: f64, d: &SimState, out: &mut SimState) {
        for k in 0..self.len() {
            out.s[k] = self.s[k] + h * d.s[k];
            out.i[k] = self.i[k] + h * d.i[k];
        }
    }
}

/// Sparse view of the coupling: in-flows per target and total out-rate.
struct Mobility {
    inflow: Vec<Vec<(usize, f64)>>,
    out_rate: Vec<f64>,
    population: Vec<f64>,
}

impl Mobility {
    fn new(graph: &RegionGraph) -> Self {
        let n = graph.len();
        let w = graph.coupling();
        let inflow = (0..n)
            .map(|to| {
                (0..n)
                    .filter(|&from| from != to && w.rate(from, to) > 0.0)
                    .map(|from| (from, w.rate(from, to)))
                    .collect()
            })
            .collect();
        let out_rate = (0..n).map(|from| w.out_rate(from)).collect();
        let population = graph.regions().iter().map(|r| r.population).collect();
        Mobility { inflow, out_rate, population }
    }

    fn derivative_into(&self, x: &SimState, params: &SIParams, d: &mut SimState) {
        for n in 0..x.len() {
            let infection = params.alpha * x.i[n] * x.s[n] / self.population[n];
            let (mut in_s, mut in_i) = (0.0, 0.0);
            for &(m, w) in &self.inflow[n] {
                in_s += w * x.s[m];
                in_i += w * x.i[m];
            }
            d.s[n] = -infection + in_s - self.out_rate[n] * x.s[n];
            d.i[n] = -params.beta * x.i[n] + infection + in_i - self.out_rate[n] * x.i[n];
        }
    }
}

/// Right-hand side of the coupled SI system at `state`.
pub fn derivative(state: &SimState, graph: &RegionGraph, params: &SIParams) -> Result<SimState> {
    if state.s.len() != graph.len() || state.i.len() != graph.len() {
        return Err(Error::InvalidParameter(format!(
            "state has {} regions, graph has {}",
            state.s.len(),
            graph.len()
        )));
    }
    let mut d = SimState::zeros(graph.len());
    Mobility::new(graph).derivative_into(state, params, &mut d);
    Ok(d)
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SimState>,
    pub params: SIParams,
    pub region_ids: Vec<String>,
    pub populations: Vec<f64>,
    /// Number of compartment values clamped from a small negative to 0.
    pub clamped: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &SimState {
        self.states.last().expect("trajectory has at least one sample")
    }

    /// Infected time series of one region.
    pub fn infected(&self, region: usize) -> impl Iterator<Item = f64> + '_ {
        self.states.iter().map(move |s| s.i[region])
    }

    /// Writes `time,region_id,S,I`, one row per sample and region.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["time", "region_id", "S", "I"])?;
        for (t, state) in self.times.iter().zip(&self.states) {
            let t = sig(*t);
            for (k, id) in self.region_ids.iter().enumerate() {
                w.write_record([t.as_str(), id, &sig(state.s[k]), &sig(state.i[k])])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Integrates the outbreak seeded with `initial_infected` individuals in
/// `seed`. An `initial_infected` of 0 is a null run.
pub fn simulate(
    graph: &RegionGraph,
    params: &SIParams,
    seed: &str,
    initial_infected: f64,
) -> Result<Trajectory> {
    params.validate()?;
    let seed_idx = graph.index_of(seed)?;
    let seed_pop = graph.region(seed_idx).population;
    if !(initial_infected >= 0.0 && initial_infected <= seed_pop) {
        return Err(Error::InvalidParameter(format!(
            "initial_infected must lie in [0, {seed_pop}], got {initial_infected}"
        )));
    }

    let n = graph.len();
    let mobility = Mobility::new(graph);
    let mut x = SimState { s: mobility.population.clone(), i: vec![0.0; n] };
    x.s[seed_idx] -= initial_infected;
    x.i[seed_idx] = initial_infected;

    let steps = params.steps();
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(x.clone());

    let mut k1 = SimState::zeros(n);
    let mut k2 = SimState::zeros(n);
    let mut k3 = SimState::zeros(n);
    let mut k4 = SimState::zeros(n);
    let mut tmp = SimState::zeros(n);
    let mut clamped = 0;
    let mut t = 0.0;

    for step in 1..=steps {
        let t_next = (step as f64 * params.dt).min(params.horizon);
        let h = t_next - t;

        mobility.derivative_into(&x, params, &mut k1);
        x.axpy(h / 2.0, &k1, &mut tmp);
        mobility.derivative_into(&tmp, params, &mut k2);
        x.axpy(h / 2.0, &k2, &mut tmp);
        mobility.derivative_into(&tmp, params, &mut k3);
        x.axpy(h, &k3, &mut tmp);
        mobility.derivative_into(&tmp, params, &mut k4);
        for r in 0..n {
            x.s[r] += h / 6.0 * (k1.s[r] + 2.0 * k2.s[r] + 2.0 * k3.s[r] + k4.s[r]);
            x.i[r] += h / 6.0 * (k1.i[r] + 2.0 * k2.i[r] + 2.0 * k3.i[r] + k4.i[r]);
        }

        for r in 0..n {
            let floor = -NEGATIVE_TOLERANCE * mobility.population[r];
            for v in [&mut x.s[r], &mut x.i[r]] {
                if *v < 0.0 {
                    if *v < floor {
                        return Err(Error::StepTooLarge {
                            region: graph.id(r).to_string(),
                            time: t_next,
                            value: *v,
                        });
                    }
                    *v = 0.0;
                    clamped += 1;
                }
            }
        }

        t = t_next;
        times.push(t);
        states.push(x.clone());
    }

    Ok(Trajectory {
        times,
        states,
        params: *params,
        region_ids: graph.regions().iter().map(|r| r.id.clone()).collect(),
        populations: mobility.population,
        clamped,
    })
}

/// Earliest time at which each region's infected fraction reaches
/// `epsilon`, linearly interpolated between samples. Regions that never
/// reach it are absent.
pub fn arrival_times(trajectory: &Trajectory, epsilon: f64) -> Result<ArrivalTable> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    let mut table = ArrivalTable::new(Provenance::Simulated, 0.0);
    for (r, id) in trajectory.region_ids.iter().enumerate() {
        let pop = trajectory.populations[r];
        let mut prev: Option<(f64, f64)> = None;
        for (&t, state) in trajectory.times.iter().zip(&trajectory.states) {
            let frac = state.i[r] / pop;
            if frac >= epsilon {
                let at = match prev {
                    Some((t0, f0)) if frac > f0 => t0 + (epsilon - f0) / (frac - f0) * (t - t0),
                    _ => t,
                };
                table.insert(id.clone(), at)?;
                break;
            }
            prev = Some((t, frac));
        }
    }
    Ok(table)
}

/// Simulation scenario as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    pub dt: f64,
    pub horizon: f64,
    pub seed_region: String,
    pub initial_infected: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

impl Scenario {
    pub fn params(&self) -> Result<SIParams> {
        SIParams::new(self.alpha, self.beta, self.dt, self.horizon)
    }
}

/// Closed-form logistic curve of an isolated region with `beta = 0`.
pub fn logistic(population: f64, i0: f64, alpha: f64, t: f64) -> f64 {
    let g = (alpha * t).exp();
    population * i0 * g / (population - i0 + i0 * g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, EdgeMode, Region};

    fn isolated(pop: f64) -> RegionGraph {
        RegionGraph::from_edges(vec![Region::new("A", "A", 0.0, 0.0, pop).unwrap()], &[], EdgeMode::Directed)
            .unwrap()
    }

    fn triple() -> RegionGraph {
        let regions = vec![
            Region::new("A", "A", 0.0, 0.0, 1000.0).unwrap(),
            Region::new("B", "B", 0.0, 1.0, 500.0).unwrap(),
            Region::new("C", "C", 0.0, 2.0, 2000.0).unwrap(),
        ];
        let edges = [
            Edge::new("A", "B", 20.0),
            Edge::new("B", "A", 5.0),
            Edge::new("B", "C", 7.0),
            Edge::new("C", "A", 11.0),
        ];
        RegionGraph::from_edges(regions, &edges, EdgeMode::Directed).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(SIParams::new(0.5, 0.0, 0.1, 10.0).is_ok());
        assert!(SIParams::new(-0.5, 0.0, 0.1, 10.0).is_err());
        assert!(SIParams::new(0.5, -1.0, 0.1, 10.0).is_err());
        assert!(SIParams::new(0.5, 0.0, 0.0, 10.0).is_err());
        assert!(SIParams::new(0.5, 0.0, 11.0, 10.0).is_err());
        assert_eq!(SIParams::new(0.5, 0.0, 1e-3, 40.0).unwrap().steps(), 40_000);
        assert_eq!(SIParams::new(0.5, 0.0, 0.3, 1.0).unwrap().steps(), 4);
    }

    #[test]
    fn disease_free_state_has_mobility_only() {
        let g = triple();
        let params = SIParams::new(0.7, 0.1, 0.1, 1.0).unwrap();
        let state = SimState { s: vec![900.0, 400.0, 1500.0], i: vec![0.0; 3] };
        let d = derivative(&state, &g, &params).unwrap();
        assert!(d.i.iter().all(|&x| x == 0.0));
        // A: inflow from B (5/500 * 400) and C (11/2000 * 1500), outflow 20/1000 * 900
        let expected = 5.0 / 500.0 * 400.0 + 11.0 / 2000.0 * 1500.0 - 20.0 / 1000.0 * 900.0;
        assert!((d.s[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn single_region_equilibrium() {
        let g = isolated(1000.0);
        let params = SIParams::new(0.5, 0.2, 0.1, 1.0).unwrap();
        let d = derivative(&SimState { s: vec![1000.0], i: vec![0.0] }, &g, &params).unwrap();
        assert_eq!((d.s[0], d.i[0]), (0.0, 0.0));
    }

    #[test]
    fn derivative_rejects_wrong_dimension() {
        let g = triple();
        let params = SIParams::new(0.5, 0.0, 0.1, 1.0).unwrap();
        assert!(derivative(&SimState::zeros(2), &g, &params).is_err());
    }

    #[test]
    fn null_run_stays_uninfected() {
        let g = triple();
        let params = SIParams::new(0.5, 0.0, 0.1, 5.0).unwrap();
        let traj = simulate(&g, &params, "A", 0.0).unwrap();
        assert!(traj.states.iter().all(|s| s.i.iter().all(|&x| x == 0.0)));
        assert!(arrival_times(&traj, 0.01).unwrap().is_empty());
    }

    #[test]
    fn simulate_errors() {
        let g = triple();
        let params = SIParams::new(0.5, 0.0, 0.1, 5.0).unwrap();
        assert!(matches!(simulate(&g, &params, "Z", 1.0), Err(Error::UnknownRegionId(_))));
        assert!(simulate(&g, &params, "A", 1001.0).is_err());
        assert!(simulate(&g, &params, "A", -1.0).is_err());
    }

    #[test]
    fn oversized_step_is_rejected() {
        // out-rate 2 per unit time with dt = 5 drives S far negative
        let regions = vec![
            Region::new("A", "A", 0.0, 0.0, 10.0).unwrap(),
            Region::new("B", "B", 0.0, 1.0, 10.0).unwrap(),
        ];
        let g = RegionGraph::from_edges(regions, &[Edge::new("A", "B", 20.0)], EdgeMode::Directed).unwrap();
        let params = SIParams::new(0.0, 0.0, 5.0, 10.0).unwrap();
        assert!(matches!(simulate(&g, &params, "A", 1.0), Err(Error::StepTooLarge { .. })));
    }

    #[test]
    fn pure_decay_is_exponential() {
        let g = isolated(1000.0);
        let params = SIParams::new(0.0, 0.3, 0.01, 10.0).unwrap();
        let traj = simulate(&g, &params, "A", 200.0).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            let exact = 200.0 * (-0.3 * t).exp();
            assert!((s.i[0] - exact).abs() <= 1e-6 * exact.max(1e-12));
        }
    }

    #[test]
    fn logistic_arrival_matches_inversion() {
        let (n, i0, alpha, eps, dt) = (1000.0, 1.0, 0.5, 0.01, 0.01);
        let g = isolated(n);
        let params = SIParams::new(alpha, 0.0, dt, 30.0).unwrap();
        let traj = simulate(&g, &params, "A", i0).unwrap();
        let got = arrival_times(&traj, eps).unwrap().get("A").unwrap();
        // invert I(t) = eps * N
        let target = eps * n;
        let exact = ((target * (n - i0)) / (i0 * (n - target))).ln() / alpha;
        assert!((got - exact).abs() <= 2.0 * dt, "{got} vs {exact}");
    }

    #[test]
    fn seed_above_threshold_arrives_at_zero() {
        let g = triple();
        let params = SIParams::new(0.5, 0.0, 0.1, 1.0).unwrap();
        let traj = simulate(&g, &params, "B", 50.0).unwrap();
        let arr = arrival_times(&traj, 0.01).unwrap();
        assert_eq!(arr.get("B"), Some(0.0));
        assert!(arrival_times(&traj, 0.0).is_err());
        assert!(arrival_times(&traj, 1.0).is_err());
    }

    #[test]
    fn unreachable_region_never_arrives() {
        let regions = vec![
            Region::new("A", "A", 0.0, 0.0, 100.0).unwrap(),
            Region::new("B", "B", 0.0, 1.0, 100.0).unwrap(),
        ];
        let g = RegionGraph::from_edges(regions, &[Edge::new("B", "A", 1.0)], EdgeMode::Directed).unwrap();
        let params = SIParams::new(1.0, 0.0, 0.1, 20.0).unwrap();
        let traj = simulate(&g, &params, "A", 1.0).unwrap();
        let arr = arrival_times(&traj, 0.01).unwrap();
        assert!(arr.get("A").is_some());
        assert_eq!(arr.get("B"), None);
    }

    #[test]
    fn trajectory_csv_layout() {
        let g = isolated(10.0);
        let params = SIParams::new(0.0, 0.0, 0.5, 1.0).unwrap();
        let traj = simulate(&g, &params, "A", 2.0).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "time,region_id,S,I\n0,A,8,2\n0.5,A,8,2\n1,A,8,2\n"
        );
    }

    #[test]
    fn scenario_defaults() {
        let s: Scenario = serde_json::from_str(
            r#"{"alpha":0.5,"dt":0.1,"horizon":10,"seed_region":"A","initial_infected":1}"#,
        )
        .unwrap();
        assert_eq!(s.beta, 0.0);
        assert_eq!(s.epsilon, DEFAULT_EPSILON);
    }
}
