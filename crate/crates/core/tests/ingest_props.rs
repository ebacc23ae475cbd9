mod common;

use hidden_geometry::effdist::haversine_km;
use hidden_geometry::synth::random_centroid;
use hidden_geometry::{assign_region, first_arrivals, GeoEvent, Region};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn five_regions(seed: u64) -> Vec<Region> {
    let mut r = common::rng(seed);
    (0..5)
        .map(|i| {
            let (lat, lon) = random_centroid(&mut r);
            Region::new(format!("c{i}"), "", lat, lon, 1.0).unwrap()
        })
        .collect()
}

#[test]
fn nearest_centroid_matches_linear_scan() {
    let regions = five_regions(12);
    let mut r = common::rng(13);
    for _ in 0..500 {
        let (lat, lon) = random_centroid(&mut r);
        let mut best = (f64::INFINITY, "");
        for reg in &regions {
            let d = haversine_km(lat, lon, reg.centroid_lat, reg.centroid_lon);
            if d < best.0 {
                best = (d, &reg.id);
            }
        }
        assert_eq!(assign_region(&GeoEvent::at(0.0, lat, lon), &regions).unwrap(), best.1);
    }
}

fn random_events(seed: u64, n: usize) -> Vec<GeoEvent> {
    let mut r = common::rng(seed);
    (0..n)
        .map(|_| {
            let (lat, lon) = random_centroid(&mut r);
            GeoEvent::at(r.random_range(1.3e9..1.4e9), lat, lon)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn order_independent(seed in any::<u64>()) {
        let regions = five_regions(seed);
        let mut events = random_events(seed, 60);
        let a = first_arrivals(&events, &regions);
        events.shuffle(&mut common::rng(seed ^ 1));
        prop_assert_eq!(first_arrivals(&events, &regions), a);
    }

    #[test]
    fn adding_events_never_delays_arrivals(seed in any::<u64>(), extra in 1usize..30) {
        let regions = five_regions(seed);
        let mut events = random_events(seed, 40);
        let before = first_arrivals(&events, &regions).table;
        events.extend(random_events(seed.wrapping_add(1), extra));
        let after = first_arrivals(&events, &regions).table;
        for (id, t) in before.iter() {
            prop_assert!(after.get(id).unwrap() <= t);
        }
        prop_assert!(after.len() >= before.len());
    }
}
