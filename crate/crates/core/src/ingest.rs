//! Turning raw observations into arrival tables.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::arrivals::{ArrivalTable, Provenance};
use crate::effdist::haversine_km;
use crate::error::{Error, Result};
use crate::fmt::parse_f64;
use crate::graph::{valid_coordinate, Region};

/// A single pre-filtered geo-tagged observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoEvent {
    /// Seconds since the UNIX epoch.
    pub timestamp: f64,
    pub lat: f64,
    pub lon: f64,
    pub region_id: Option<String>,
}

impl GeoEvent {
    pub fn at(timestamp: f64, lat: f64, lon: f64) -> Self {
        GeoEvent { timestamp, lat, lon, region_id: None }
    }

    pub fn in_region(timestamp: f64, region_id: impl Into<String>) -> Self {
        GeoEvent { timestamp, lat: 0.0, lon: 0.0, region_id: Some(region_id.into()) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedEvents {
    pub events: Vec<GeoEvent>,
    /// Rows that could not be parsed.
    pub malformed: usize,
}

/// Reads `timestamp,lat,lon[,region_id]`. Malformed rows are counted and
/// skipped.
pub fn read_events_csv<R: Read>(reader: R) -> Result<ParsedEvents> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut events = Vec::new();
    let mut malformed = 0;
    for record in rdr.records() {
        let Ok(record) = record else {
            malformed += 1;
            continue;
        };
        let num = |i: usize| record.get(i).and_then(parse_f64).filter(|v| v.is_finite());
        let region_id = record.get(3).filter(|s| !s.is_empty()).map(str::to_string);
        match (num(0), num(1), num(2)) {
            (Some(timestamp), Some(lat), Some(lon)) => {
                events.push(GeoEvent { timestamp, lat, lon, region_id })
            }
            // coordinates may be blank when the region is given
            (Some(timestamp), _, _) if region_id.is_some() => {
                events.push(GeoEvent { timestamp, lat: f64::NAN, lon: f64::NAN, region_id })
            }
            _ => malformed += 1,
        }
    }
    Ok(ParsedEvents { events, malformed })
}

/// Region of an event: its pre-assigned id if present, otherwise the
/// region with the nearest centroid (ties go to the smaller id).
pub fn assign_region<'a>(event: &GeoEvent, regions: &'a [Region]) -> Result<&'a str> {
    if regions.is_empty() {
        return Err(Error::InvalidParameter("no regions to assign to".into()));
    }
    if let Some(id) = &event.region_id {
        return regions
            .iter()
            .find(|r| &r.id == id)
            .map(|r| r.id.as_str())
            .ok_or_else(|| Error::UnknownRegionId(id.clone()));
    }
    if !valid_coordinate(event.lat, event.lon) {
        return Err(Error::InvalidCoordinate {
            id: format!("event@{}", event.timestamp),
            lat: event.lat,
            lon: event.lon,
        });
    }
    let nearest = regions
        .iter()
        .map(|r| (haversine_km(event.lat, event.lon, r.centroid_lat, r.centroid_lon), r))
        .min_by(|(da, ra), (db, rb)| da.total_cmp(db).then_with(|| ra.id.cmp(&rb.id)))
        .expect("regions nonempty");
    Ok(&nearest.1.id)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventArrivals {
    pub table: ArrivalTable,
    /// Events that could not be assigned to a region.
    pub skipped: usize,
}

/// Earliest event time per region.
pub fn first_arrivals(events: &[GeoEvent], regions: &[Region]) -> EventArrivals {
    let mut table = ArrivalTable::new(Provenance::Events, 0.0);
    let mut skipped = 0;
    if regions.is_empty() {
        return EventArrivals { table, skipped: events.len() };
    }
    for e in events {
        if !e.timestamp.is_finite() {
            skipped += 1;
            continue;
        }
        match assign_region(e, regions) {
            Ok(id) => table.insert_min(id, e.timestamp),
            Err(err) => {
                log::debug!("skipping event: {err}");
                skipped += 1;
            }
        }
    }
    EventArrivals { table, skipped }
}

/// Cumulative activity of one region in fixed-width time bins.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseSeries {
    pub region_id: String,
    pub bin_width: f64,
    /// `(bin_start, cumulative_count)`.
    pub bins: Vec<(f64, f64)>,
}

impl CoarseSeries {
    pub fn validate(&self) -> Result<()> {
        let invalid = |reason: String| {
            Err(Error::InvalidSeries { region: self.region_id.clone(), reason })
        };
        if !(self.bin_width > 0.0 && self.bin_width.is_finite()) {
            return invalid(format!("bin width {} must be positive", self.bin_width));
        }
        let tol = 1e-9 * self.bin_width;
        for pair in self.bins.windows(2) {
            let ((s0, c0), (s1, c1)) = (pair[0], pair[1]);
            if ((s1 - s0) - self.bin_width).abs() > tol {
                return invalid(format!(
                    "bins at {s0} and {s1} are not one bin width ({}) apart",
                    self.bin_width
                ));
            }
            if c1 < c0 {
                return Err(Error::NonMonotoneCumulative {
                    region: self.region_id.clone(),
                    bin_start: s1,
                });
            }
        }
        if let Some(&(start, c)) = self.bins.iter().find(|(s, c)| !s.is_finite() || !(*c >= 0.0)) {
            return invalid(format!("bad bin ({start}, {c})"));
        }
        Ok(())
    }
}

/// Reads `region_id,bin_start,cumulative_count` rows into one series per
/// region, bins sorted by start.
pub fn read_coarse_csv<R: Read>(reader: R, bin_width: f64) -> Result<Vec<CoarseSeries>> {
    #[derive(Deserialize)]
    struct Row {
        region_id: String,
        bin_start: f64,
        cumulative_count: f64,
    }
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut grouped: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for row in rdr.deserialize::<Row>() {
        let row = row?;
        grouped.entry(row.region_id).or_default().push((row.bin_start, row.cumulative_count));
    }
    grouped
        .into_iter()
        .map(|(region_id, mut bins)| {
            bins.sort_by(|a, b| a.0.total_cmp(&b.0));
            let series = CoarseSeries { region_id, bin_width, bins };
            series.validate()?;
            Ok(series)
        })
        .collect()
}

/// Start of the first bin whose cumulative count reaches `threshold`, per
/// region. The table's resolution is the bin width.
pub fn arrivals_from_coarse(series: &[CoarseSeries], threshold: f64) -> Result<ArrivalTable> {
    if !(threshold >= 1.0) {
        return Err(Error::InvalidParameter(format!("threshold must be >= 1, got {threshold}")));
    }
    let width = series.first().map_or(0.0, |s| s.bin_width);
    let mut table = ArrivalTable::new(Provenance::CoarseBins, width);
    for s in series {
        s.validate()?;
        if s.bin_width != width {
            return Err(Error::InvalidSeries {
                region: s.region_id.clone(),
                reason: format!("bin width {} differs from {width}", s.bin_width),
            });
        }
        if let Some(&(start, _)) = s.bins.iter().find(|(_, c)| *c >= threshold) {
            table.insert(s.region_id.clone(), start)?;
        }
    }
    Ok(table)
}

/// Re-expresses fine arrival times as cumulative 0/1 series in bins of
/// `bin_width` starting at `origin` (which must not exceed any arrival).
pub fn coarsen(table: &ArrivalTable, bin_width: f64, origin: f64) -> Result<Vec<CoarseSeries>> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::InvalidParameter("bin width must be positive".into()));
    }
    let Some((lo, hi)) = table.span() else {
        return Ok(Vec::new());
    };
    if origin > lo {
        return Err(Error::InvalidParameter(format!("origin {origin} is after arrival {lo}")));
    }
    let slot = |t: f64| ((t - origin) / bin_width).floor() as usize;
    let last = slot(hi);
    Ok(table
        .iter()
        .map(|(id, t)| {
            let k = slot(t);
            CoarseSeries {
                region_id: id.to_string(),
                bin_width,
                bins: (0..=last)
                    .map(|b| (origin + b as f64 * bin_width, if b >= k { 1.0 } else { 0.0 }))
                    .collect(),
            }
        })
        .collect())
}
