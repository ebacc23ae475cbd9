// Arrival times from geo-tagged events and from coarse weekly counts,
// then their rank agreement.

use hidden_geometry::ingest::{read_coarse_csv, read_events_csv};
use hidden_geometry::{arrivals_from_coarse, compare_arrivals, first_arrivals, Region};

const EVENTS: &str = "timestamp,lat,lon,region_id
3.5,14.5,121.0,
1.2,14.7,120.9,
9.0,10.3,123.9,
12.4,,,DVO
7.7,10.8,122.5,
not-a-number,0,0,
";

const WEEKLY: &str = "region_id,bin_start,cumulative_count
MNL,0,4
MNL,7,9
CEB,0,0
CEB,7,2
DVO,0,0
DVO,7,0
DVO,14,5
ILO,0,0
ILO,7,1
";

fn run() -> hidden_geometry::Result<()> {
    let regions = vec![
        Region::new("MNL", "Manila", 14.60, 120.98, 1.3e7)?,
        Region::new("CEB", "Cebu", 10.32, 123.89, 3.0e6)?,
        Region::new("DVO", "Davao", 7.19, 125.46, 1.8e6)?,
        Region::new("ILO", "Iloilo", 10.72, 122.56, 4.5e5)?,
    ];

    let parsed = read_events_csv(EVENTS.as_bytes())?;
    let events = first_arrivals(&parsed.events, &regions);
    println!("{} events, {} malformed rows", parsed.events.len(), parsed.malformed);
    for (id, t) in events.table.iter() {
        println!("first event in {id} at day {t}");
    }

    let weekly = arrivals_from_coarse(&read_coarse_csv(WEEKLY.as_bytes(), 7.0)?, 1.0)?;
    for (id, t) in weekly.iter() {
        println!("weekly series reaches {id} in the bin starting day {t}");
    }

    let cmp = compare_arrivals(&events.table, &weekly)?;
    println!("Spearman rho = {:.3} over {} regions", cmp.rho, cmp.common_regions);
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
