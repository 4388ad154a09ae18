//! Source-shaped records produced by the parsers, and the canonical
//! [`Record`]s the store consumes.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::metric::MetricKind;
use crate::region::{normalize_state, RegionId};
use crate::time::YearMonth;

/// One row of the county-level case/death feed (cumulative counts).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawCaseRecord {
    pub date: NaiveDate,
    pub county: String,
    pub state: String,
    /// Absent for "Unknown"-county and city-aggregate rows.
    pub fips: Option<RegionId>,
    pub cases: u64,
    pub deaths: u64,
}

/// One row of the state-level vaccination feed (cumulative counts).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawVaccinationRecord {
    pub date: NaiveDate,
    /// A state-level id.
    pub state: RegionId,
    pub doses_administered: u64,
    pub people_fully_vaccinated: u64,
}

impl RawVaccinationRecord {
    pub fn postal(&self) -> &'static str {
        self.state.state_info().postal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusRecord {
    pub fips: RegionId,
    pub population: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ZipCode(u32);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("`{0}` is not a 5-digit ZIP code")]
pub struct ZipCodeError(pub String);

impl ZipCode {
    pub fn new(code: u32) -> Option<Self> {
        (code <= 99_999).then_some(Self(code))
    }
}

impl fmt::Display for ZipCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:05}", self.0)
    }
}

impl FromStr for ZipCode {
    type Err = ZipCodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.len() != 5 || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(ZipCodeError(s.into()));
        }
        Ok(Self(s.parse().expect("five digits")))
    }
}

impl Serialize for ZipCode {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ZipCode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrosswalkEntry {
    pub zip: ZipCode,
    pub fips: RegionId,
    /// Share of the ZIP's addresses that fall in `fips`.
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternsRecord {
    pub fips: RegionId,
    pub month: YearMonth,
    pub visits: u64,
    pub poi_count: u64,
    /// Two-digit NAICS sector.
    pub naics_prefix: u8,
}

/// Canonical unit of storage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Record {
    Observation {
        region: RegionId,
        metric: MetricKind,
        date: NaiveDate,
        value: f64,
    },
    Population {
        region: RegionId,
        population: u64,
    },
    Name {
        region: RegionId,
        name: String,
    },
    /// Replaces the whole mapping of one ZIP code.
    Crosswalk {
        zip: ZipCode,
        entries: Vec<(RegionId, f64)>,
    },
    PointsOfInterest {
        region: RegionId,
        month: YearMonth,
        naics: u8,
        count: u64,
    },
}

/// County rows become county observations; rows without a FIPS code are
/// summed per (state, date) and stored against the state id so state totals
/// still include them.
pub fn case_records(rows: &[RawCaseRecord]) -> Vec<Record> {
    let mut out = Vec::new();
    let mut names = BTreeMap::new();
    let mut state_remainder: BTreeMap<(RegionId, NaiveDate), (u64, u64)> = BTreeMap::new();
    for row in rows {
        match row.fips {
            Some(region) => {
                out.push(observation(region, MetricKind::CasesCum, row.date, row.cases as f64));
                out.push(observation(region, MetricKind::DeathsCum, row.date, row.deaths as f64));
                if region.level() == crate::Level::County && !row.county.is_empty() {
                    names.insert(region, row.county.clone());
                }
            }
            None => {
                let Some(state) = normalize_state(&row.state) else {
                    continue;
                };
                let slot = state_remainder.entry((state.region_id(), row.date)).or_default();
                slot.0 += row.cases;
                slot.1 += row.deaths;
            }
        }
    }
    for ((region, date), (cases, deaths)) in state_remainder {
        out.push(observation(region, MetricKind::CasesCum, date, cases as f64));
        out.push(observation(region, MetricKind::DeathsCum, date, deaths as f64));
    }
    out.extend(names.into_iter().map(|(region, name)| Record::Name { region, name }));
    out
}

pub fn vaccination_records(rows: &[RawVaccinationRecord]) -> Vec<Record> {
    rows.iter()
        .flat_map(|r| {
            [
                observation(r.state, MetricKind::VaxDosesCum, r.date, r.doses_administered as f64),
                observation(
                    r.state,
                    MetricKind::VaxFullCum,
                    r.date,
                    r.people_fully_vaccinated as f64,
                ),
            ]
        })
        .collect()
}

pub fn census_records(rows: &[CensusRecord]) -> Vec<Record> {
    rows.iter()
        .map(|r| Record::Population {
            region: r.fips,
            population: r.population,
        })
        .collect()
}

pub fn crosswalk_records(entries: &[CrosswalkEntry]) -> Vec<Record> {
    let mut by_zip: BTreeMap<ZipCode, Vec<(RegionId, f64)>> = BTreeMap::new();
    for e in entries {
        by_zip.entry(e.zip).or_default().push((e.fips, e.weight));
    }
    by_zip
        .into_iter()
        .map(|(zip, entries)| Record::Crosswalk { zip, entries })
        .collect()
}

/// Visits are summed across sectors into one monthly observation dated on
/// the first of the month; POI counts keep their sector.
pub fn patterns_records(rows: &[PatternsRecord]) -> Vec<Record> {
    let mut visits: BTreeMap<(RegionId, YearMonth), u64> = BTreeMap::new();
    let mut pois: BTreeMap<(RegionId, YearMonth, u8), u64> = BTreeMap::new();
    for r in rows {
        *visits.entry((r.fips, r.month)).or_default() += r.visits;
        *pois.entry((r.fips, r.month, r.naics_prefix)).or_default() += r.poi_count;
    }
    let mut out: Vec<Record> = visits
        .into_iter()
        .map(|((region, month), v)| observation(region, MetricKind::VisitsMonthly, month.first_day(), v as f64))
        .collect();
    out.extend(
        pois.into_iter()
            .map(|((region, month, naics), count)| Record::PointsOfInterest {
                region,
                month,
                naics,
                count,
            }),
    );
    out
}

fn observation(region: RegionId, metric: MetricKind, date: NaiveDate, value: f64) -> Record {
    Record::Observation {
        region,
        metric,
        date,
        value,
    }
}
