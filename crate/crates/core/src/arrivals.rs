use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::{parse_f64, sig};

/// Where an arrival table came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Simulated,
    Events,
    CoarseBins,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Simulated => "simulated",
            Provenance::Events => "events",
            Provenance::CoarseBins => "coarse-bins",
        })
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "simulated" => Ok(Provenance::Simulated),
            "events" => Ok(Provenance::Events),
            "coarse-bins" => Ok(Provenance::CoarseBins),
            other => Err(Error::Parse {
                location: "provenance".into(),
                reason: format!("unknown provenance `{other}`"),
            }),
        }
    }
}

/// First-arrival time per region. Regions without an arrival are simply
/// absent from the table.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalTable {
    entries: BTreeMap<String, f64>,
    pub provenance: Provenance,
    /// Time resolution of the measurement, 0 for exact times.
    pub resolution: f64,
}

impl ArrivalTable {
    pub fn new(provenance: Provenance, resolution: f64) -> Self {
        ArrivalTable { entries: BTreeMap::new(), provenance, resolution: resolution.max(0.0) }
    }

    pub fn from_entries<I, S>(provenance: Provenance, resolution: f64, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut table = ArrivalTable::new(provenance, resolution);
        for (id, t) in entries {
            table.insert(id, t)?;
        }
        Ok(table)
    }

    pub fn insert(&mut self, id: impl Into<String>, time: f64) -> Result<()> {
        let id = id.into();
        if !time.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "arrival time for `{id}` is not finite"
            )));
        }
        self.entries.insert(id, time);
        Ok(())
    }

    /// Keeps the earlier of the existing and the new time.
    pub(crate) fn insert_min(&mut self, id: &str, time: f64) {
        self.entries
            .entry(id.to_string())
            .and_modify(|t| *t = t.min(time))
            .or_insert(time);
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.entries.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries ordered by region id.
    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn span(&self) -> Option<(f64, f64)> {
        let mut it = self.entries.values().copied();
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), t| (lo.min(t), hi.max(t))))
    }

    /// Applies `t -> scale * t + offset` to every entry.
    pub fn affine(&self, scale: f64, offset: f64) -> ArrivalTable {
        ArrivalTable {
            entries: self
                .entries
                .iter()
                .map(|(k, &t)| (k.clone(), scale * t + offset))
                .collect(),
            provenance: self.provenance,
            resolution: self.resolution * scale.abs(),
        }
    }

    /// Writes `region_id,arrival_time,provenance,resolution`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["region_id", "arrival_time", "provenance", "resolution"])?;
        let prov = self.provenance.to_string();
        let res = sig(self.resolution);
        for (id, t) in self.iter() {
            w.write_record([id, &sig(t), &prov, &res])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the format produced by [`ArrivalTable::write_csv`]. Rows with an
    /// empty `arrival_time` are treated as absent.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut table: Option<ArrivalTable> = None;
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            let location = format!("arrival row {}", line + 1);
            let field = |i: usize| record.get(i).unwrap_or("");
            let provenance: Provenance = field(2).parse()?;
            let resolution = parse_f64(field(3)).ok_or_else(|| Error::Parse {
                location: location.clone(),
                reason: "bad resolution".into(),
            })?;
            let t = table.get_or_insert_with(|| ArrivalTable::new(provenance, resolution));
            if field(1).is_empty() {
                continue;
            }
            let time = parse_f64(field(1)).ok_or_else(|| Error::Parse {
                location: location.clone(),
                reason: format!("bad arrival time `{}`", field(1)),
            })?;
            t.insert(field(0), time)?;
        }
        Ok(table.unwrap_or_else(|| ArrivalTable::new(Provenance::Events, 0.0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let t = ArrivalTable::from_entries(
            Provenance::CoarseBins,
            14.0,
            [("PH", 0.0), ("US", 28.0), ("KR", 14.0)],
        )
        .unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text,
            "region_id,arrival_time,provenance,resolution\nKR,14,coarse-bins,14\nPH,0,coarse-bins,14\nUS,28,coarse-bins,14\n"
        );
        assert_eq!(ArrivalTable::read_csv(buf.as_slice()).unwrap(), t);
    }

    #[test]
    fn empty_time_is_absent() {
        let csv = "region_id,arrival_time,provenance,resolution\nA,,simulated,0\nB,2.5,simulated,0\n";
        let t = ArrivalTable::read_csv(csv.as_bytes()).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.get("B"), Some(2.5));
        assert_eq!(t.get("A"), None);
    }

    #[test]
    fn rejects_non_finite() {
        let mut t = ArrivalTable::new(Provenance::Events, 0.0);
        assert!(t.insert("A", f64::NAN).is_err());
    }
}
