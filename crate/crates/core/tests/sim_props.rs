mod common;

use hidden_geometry::sim::logistic;
use hidden_geometry::synth::{random_graph, SyntheticConfig};
use hidden_geometry::{
    arrival_times, derivative, simulate, Edge, EdgeMode, FluxMatrix, Region, RegionGraph, SIParams, SimState,
};
use rand::Rng;

#[test]
fn derivative_matches_scalar_terms() {
    let mut r = common::rng(4);
    for _ in 0..20 {
        let (g, rows) = common::random_flux_graph(&mut r, 3, 0.8);
        let pop: Vec<f64> = g.regions().iter().map(|x| x.population).collect();
        let state = SimState {
            s: (0..3).map(|k| r.random_range(0.0..pop[k])).collect(),
            i: (0..3).map(|k| r.random_range(0.0..pop[k])).collect(),
        };
        let params = SIParams::new(r.random_range(0.0..2.0), r.random_range(0.0..1.0), 0.1, 1.0).unwrap();
        let d = derivative(&state, &g, &params).unwrap();
        for n in 0..3 {
            let local = params.alpha * state.i[n] * state.s[n] / pop[n];
            let mut ds = -local;
            let mut di = -params.beta * state.i[n] + local;
            for m in (0..3).filter(|&m| m != n) {
                let w_in = rows[m][n] / pop[m];
                let w_out = rows[n][m] / pop[n];
                ds += w_in * state.s[m] - w_out * state.s[n];
                di += w_in * state.i[m] - w_out * state.i[n];
            }
            assert!((d.s[n] - ds).abs() <= 1e-9 * ds.abs().max(1.0));
            assert!((d.i[n] - di).abs() <= 1e-9 * di.abs().max(1.0));
        }
    }
}

fn uniform_graph(scale: f64) -> RegionGraph {
    let regions: Vec<Region> = (0..6)
        .map(|i| Region::new(format!("u{i}"), "", 0.0, i as f64, 1e5).unwrap())
        .collect();
    let edges: Vec<Edge> = [(0, 1, 5.0), (1, 2, 2.0), (0, 3, 1.0), (3, 4, 8.0), (4, 5, 3.0), (2, 5, 0.5)]
        .iter()
        .map(|&(a, b, w)| Edge::new(format!("u{a}"), format!("u{b}"), w * 100.0 * scale))
        .collect();
    RegionGraph::from_edges(regions, &edges, EdgeMode::Undirected).unwrap()
}

#[test]
fn total_population_is_conserved() {
    let g = random_graph(&SyntheticConfig::default(), 3).unwrap();
    let params = SIParams::new(0.3, 0.0, 0.1, 200.0).unwrap();
    let traj = simulate(&g, &params, g.id(0), 10.0).unwrap();
    let start = traj.states[0].total();
    for s in &traj.states {
        assert!(((s.total() - start) / start).abs() <= 1e-6);
    }
}

#[test]
fn infections_never_decrease_without_removal() {
    let g = uniform_graph(1.0);
    let params = SIParams::new(0.5, 0.0, 0.05, 80.0).unwrap();
    let traj = simulate(&g, &params, "u0", 5.0).unwrap();
    for r in 0..g.len() {
        let series: Vec<f64> = traj.infected(r).collect();
        let first = series.iter().position(|&x| x > 0.0).unwrap();
        for w in series[first..].windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "region {r}: {} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn logistic_closed_form() {
    let (n, i0, alpha) = (1000.0, 1.0, 0.5);
    let g = RegionGraph::new(vec![Region::new("solo", "", 0.0, 0.0, n).unwrap()], FluxMatrix::zeros(1)).unwrap();
    let params = SIParams::new(alpha, 0.0, 1e-3, 40.0).unwrap();
    let traj = simulate(&g, &params, "solo", i0).unwrap();
    let worst = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(&t, s)| ((s.i[0] - logistic(n, i0, alpha, t)) / logistic(n, i0, alpha, t)).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-6, "{worst}");
}

#[test]
fn rk4_error_shrinks_sixteenfold_when_halving_dt() {
    // logistic growth with coupling is smooth; compare against a fine run
    let g = uniform_graph(1.0);
    let run = |dt: f64| {
        let params = SIParams::new(0.8, 0.1, dt, 20.0).unwrap();
        simulate(&g, &params, "u0", 100.0).unwrap().final_state().clone()
    };
    let reference = run(0.005);
    let err = |s: &SimState| {
        s.i.iter()
            .zip(&reference.i)
            .chain(s.s.iter().zip(&reference.s))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (err(&run(0.4)), err(&run(0.2)));
    let ratio = e1 / e2;
    assert!((8.0..=24.0).contains(&ratio), "ratio {ratio} ({e1} / {e2})");
}

#[test]
fn flux_rescaling_rescales_arrivals_uniformly() {
    let params = SIParams::new(0.4, 0.0, 0.05, 300.0).unwrap();
    let arrivals = |scale: f64| {
        let g = uniform_graph(scale);
        arrival_times(&simulate(&g, &params, "u0", 10.0).unwrap(), 0.01).unwrap()
    };
    let (a, b) = (arrivals(1.0), arrivals(4.0));
    let order = |t: &hidden_geometry::ArrivalTable| {
        let mut ids: Vec<(String, f64)> = t.iter().map(|(k, v)| (k.to_string(), v)).collect();
        ids.sort_by(|x, y| x.1.total_cmp(&y.1));
        ids.into_iter().map(|(k, _)| k).collect::<Vec<_>>()
    };
    assert_eq!(a.len(), 6);
    assert_eq!(order(&a), order(&b));
    for (id, t) in a.iter().filter(|(id, _)| *id != "u0") {
        assert!(b.get(id).unwrap() < t);
    }
}
