//! Hidden geometry of spreading processes on weighted region graphs.
//!
//! Flux between regions defines transition probabilities `P`, and each
//! edge gets an effective length `1 - ln P`. Measured from the right
//! source, arrival times of a contagion grow linearly with effective
//! distance. This crate builds the graphs, simulates meta-population SI
//! outbreaks on them, extracts arrival times from simulations or
//! observations, and ranks candidate sources by how linear that relation
//! is.

pub mod arrivals;
pub mod bundle;
pub mod commands;
pub mod effdist;
pub mod error;
pub mod fmt;
pub mod graph;
pub mod infer;
pub mod ingest;
pub mod sim;
pub mod synth;

pub use arrivals::{ArrivalTable, Provenance};
pub use bundle::GraphBundle;
pub use effdist::{
    all_fields, all_pairs_effective, edge_length, geographic_distance, radial_layout, shortest_path_field,
    stage_histogram, EffectiveDistanceField, RadialLayout, StageHistogram,
};
pub use error::{Error, Result};
pub use graph::{
    build_flux, derive_coupling, derive_transitions, load_regions, CouplingMatrix, Edge, EdgeMode,
    FluxMatrix, Region, RegionGraph, TransitionMatrix,
};
pub use infer::{
    compare_arrivals, geographic_fit, infer_source, linear_fit, score_candidate, window_smooth, Comparison,
    FitOptions, FitResult, SourceRanking, Weighting,
};
pub use ingest::{arrivals_from_coarse, assign_region, first_arrivals, CoarseSeries, GeoEvent};
pub use sim::{arrival_times, derivative, simulate, SIParams, Scenario, SimState, Trajectory};
