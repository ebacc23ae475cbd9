// Recovers the origin of a simulated outbreak from arrival times alone.

use hidden_geometry::infer::scatter;
use hidden_geometry::synth::{random_graph, SyntheticConfig};
use hidden_geometry::{
    arrival_times, geographic_fit, infer_source, shortest_path_field, simulate, FitOptions, SIParams,
};

fn run() -> hidden_geometry::Result<()> {
    let graph = random_graph(&SyntheticConfig::default(), 7)?;
    let seed = "R23";
    let params = SIParams::new(0.2, 0.0, 0.1, 300.0)?;
    let arrivals = arrival_times(&simulate(&graph, &params, seed, 1.0)?, 0.01)?;

    let ranking = infer_source(&graph, &arrivals, &FitOptions::raw())?;
    println!("true origin {seed}");
    for (k, c) in ranking.ranked.iter().take(5).enumerate() {
        println!("{:>2}. {}  R² = {:.4}  slope = {:.2} days", k + 1, c.id, c.fit.r_squared, c.fit.slope);
    }

    let best = &ranking.best().id;
    let geo = geographic_fit(&graph, &arrivals, best)?;
    println!("geographic distance from {best}: R² = {:.4}", geo.r_squared);

    let field = shortest_path_field(&graph, best)?;
    for row in scatter(&graph, &field, &arrivals).iter().take(5) {
        println!(
            "{}  {:8.1} km  D_eff {:6.3}  T_a {:?}",
            row.region_id, row.geographic_km, row.effective_distance, row.arrival_time
        );
    }
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
