// Effective distances and the shortest-path tree on a small directed network.

use hidden_geometry::{shortest_path_field, Edge, EdgeMode, Region, RegionGraph};

fn run() -> hidden_geometry::Result<()> {
    let regions = vec![
        Region::new("MNL", "Manila", 14.60, 120.98, 1.3e7)?,
        Region::new("CEB", "Cebu", 10.32, 123.89, 3.0e6)?,
        Region::new("DVO", "Davao", 7.19, 125.46, 1.8e6)?,
        Region::new("ILO", "Iloilo", 10.72, 122.56, 4.5e5)?,
    ];
    let edges = vec![
        Edge::new("MNL", "CEB", 900.0),
        Edge::new("MNL", "DVO", 300.0),
        Edge::new("MNL", "ILO", 100.0),
        Edge::new("CEB", "DVO", 400.0),
        Edge::new("CEB", "ILO", 200.0),
    ];
    let graph = RegionGraph::from_edges(regions, &edges, EdgeMode::Undirected)?;

    let field = shortest_path_field(&graph, "MNL")?;
    println!("{:<4} {:>9} {:>6}", "id", "D_eff", "via");
    for v in 0..graph.len() {
        let via = field.predecessor[v].map_or("-", |p| graph.id(p));
        println!("{:<4} {:>9.4} {:>6}", graph.id(v), field.distance[v], via);
    }

    let mut csv = Vec::new();
    field.write_csv(&graph, &mut csv)?;
    print!("{}", String::from_utf8_lossy(&csv));
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
