// Seeds an SI outbreak on a synthetic region graph and prints arrival times.

use hidden_geometry::synth::{random_graph, SyntheticConfig};
use hidden_geometry::{arrival_times, simulate, SIParams};

fn run() -> hidden_geometry::Result<()> {
    let graph = random_graph(&SyntheticConfig { regions: 20, ..Default::default() }, 42)?;
    let params = SIParams::new(0.2, 0.0, 0.1, 250.0)?;
    let traj = simulate(&graph, &params, "R00", 1.0)?;
    let arrivals = arrival_times(&traj, 0.01)?;

    let last = traj.final_state();
    println!("{} steps, final infected fraction {:.3}", traj.times.len() - 1, last.i.iter().sum::<f64>() / last.total());
    let mut order: Vec<_> = arrivals.iter().collect();
    order.sort_by(|a, b| a.1.total_cmp(&b.1));
    for (id, t) in order.iter().take(8) {
        println!("{id}  {t:7.2} days");
    }
    println!("... {} regions reached", arrivals.len());
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
