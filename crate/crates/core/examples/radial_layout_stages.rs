// Radial layout of the shortest-path tree and a staged histogram of
// effective distance, the data behind a wavefront figure.

use hidden_geometry::synth::{random_graph, SyntheticConfig};
use hidden_geometry::{arrival_times, radial_layout, shortest_path_field, simulate, stage_histogram, SIParams};

fn run() -> hidden_geometry::Result<()> {
    let graph = random_graph(&SyntheticConfig { regions: 30, ..Default::default() }, 3)?;
    let params = SIParams::new(0.2, 0.0, 0.1, 300.0)?;
    let arrivals = arrival_times(&simulate(&graph, &params, "R05", 1.0)?, 0.01)?;

    let field = shortest_path_field(&graph, "R05")?;
    let layout = radial_layout(&field, &graph);
    for node in layout.nodes.iter().take(6) {
        println!("{:<4} r = {:6.3}  theta = {:6.3}", node.id, node.r, node.theta);
    }
    println!("{} tree edges", layout.edges.len());

    let hist = stage_histogram(&field, &graph, &arrivals, 4, 2.0)?;
    for stage in &hist.stages {
        let mean = stage.mean_distance.map_or("-".to_string(), |d| format!("{d:.2}"));
        println!(
            "stage {}: days {:6.1}..{:6.1}  {:2} regions  mean D_eff {mean}  bins {:?}",
            stage.index + 1,
            stage.t_start,
            stage.t_end,
            stage.regions.len(),
            stage.counts
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
