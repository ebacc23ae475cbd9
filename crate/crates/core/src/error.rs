use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate region id `{0}`")]
    DuplicateRegionId(String),
    #[error("unknown region id `{0}`")]
    UnknownRegionId(String),
    #[error("invalid coordinate for region `{id}`: lat={lat}, lon={lon}")]
    InvalidCoordinate { id: String, lat: f64, lon: f64 },
    #[error("region `{id}` has non-positive population {population}")]
    NonPositivePopulation { id: String, population: f64 },
    #[error("negative flux weight {weight} on edge {from} -> {to}")]
    NegativeWeight { from: String, to: String, weight: f64 },
    #[error("transition probability must lie in (0, 1], got {0}")]
    NonPositiveProbability(f64),
    #[error("step too large: region `{region}` reached {value} at t={time}")]
    StepTooLarge { region: String, time: f64, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("arrival table is empty")]
    EmptyArrivals,
    #[error("empty input")]
    EmptyInput,
    #[error("too few points for a fit: need at least 2, got {0}")]
    TooFewPoints(usize),
    #[error("no candidate source could be scored")]
    NoScorableCandidate,
    #[error("at least 3 common regions are needed, got {0}")]
    TooFewCommonRegions(usize),
    #[error("cumulative series for region `{region}` decreases at bin {bin_start}")]
    NonMonotoneCumulative { region: String, bin_start: f64 },
    #[error("invalid coarse series for region `{region}`: {reason}")]
    InvalidSeries { region: String, reason: String },
    #[error("malformed input at {location}: {reason}")]
    Parse { location: String, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
