//! Streaming parsers for the five CSV sources.
//!
//! Every parser reads its input row by row and never fails on a bad row:
//! the row is counted under a [`RejectReason`] and parsing continues. Only a
//! missing header column or an I/O failure aborts.

use std::collections::HashMap;
use std::io::Read;

use atlas_core::records::ZipCode;
use atlas_core::region::normalize_state;
use atlas_core::time::parse_iso_date;
use atlas_core::{
    CensusRecord, CrosswalkEntry, NaiveDate, PatternsRecord, RawCaseRecord, RawVaccinationRecord, RegionId, YearMonth,
};
use serde::{Deserialize, Serialize};

use crate::report::{IngestReport, RejectReason, Source};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("missing required column `{0}`")]
    Schema(String),
    #[error("read failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(csv::Error),
    #[error("column mapping: {0}")]
    Mapping(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub records: Vec<T>,
    pub report: IngestReport,
}

const CROSSWALK_TOLERANCE: f64 = 1e-3;

struct Rows<R: Read> {
    reader: csv::Reader<R>,
    columns: Vec<usize>,
    record: csv::StringRecord,
}

enum Row<'a> {
    Fields(Vec<&'a str>),
    Undecodable,
}

impl<R: Read> Rows<R> {
    fn open(input: R, required: &[&str]) -> Result<Self, IngestError> {
        let mut reader = csv::ReaderBuilder::new()
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(input);
        let headers = reader.headers().map_err(csv_error)?.clone();
        let columns = required
            .iter()
            .map(|name| {
                headers
                    .iter()
                    .position(|h| h.trim_start_matches('\u{feff}') == *name)
                    .ok_or_else(|| IngestError::Schema((*name).into()))
            })
            .collect::<Result<_, _>>()?;
        Ok(Self {
            reader,
            columns,
            record: csv::StringRecord::new(),
        })
    }

    /// Next data row with the required columns picked out, `None` at EOF.
    fn next(&mut self) -> Result<Option<Row<'_>>, IngestError> {
        match self.reader.read_record(&mut self.record) {
            Ok(false) => Ok(None),
            Ok(true) => {
                let fields: Option<Vec<&str>> = self.columns.iter().map(|&i| self.record.get(i)).collect();
                Ok(Some(fields.map_or(Row::Undecodable, Row::Fields)))
            }
            Err(e) => match e.kind() {
                csv::ErrorKind::Io(_) => Err(csv_error(e)),
                _ => Ok(Some(Row::Undecodable)),
            },
        }
    }
}

fn csv_error(e: csv::Error) -> IngestError {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => IngestError::Io(io),
            _ => unreachable!(),
        }
    } else {
        IngestError::Csv(e)
    }
}

fn count(s: &str) -> Option<u64> {
    s.parse().ok()
}

/// County-level cumulative cases and deaths, header
/// `date,county,state,fips,cases,deaths`.
pub fn parse_nyt<R: Read>(input: R) -> Result<Parsed<RawCaseRecord>, IngestError> {
    let mut rows = Rows::open(input, &["date", "county", "state", "fips", "cases", "deaths"])?;
    let mut report = IngestReport::new(Source::Nyt);
    let mut records = Vec::new();
    while let Some(row) = rows.next()? {
        report.rows += 1;
        let Row::Fields(f) = row else {
            report.reject(RejectReason::Malformed);
            continue;
        };
        let (Some(date), Some(cases), Some(deaths)) = (parse_iso_date(f[0]), count(f[4]), count(f[5])) else {
            report.reject(RejectReason::Malformed);
            continue;
        };
        let state = normalize_state(f[2]);
        let fips = if f[3].is_empty() {
            if state.is_none() {
                report.reject(RejectReason::UnknownState);
                continue;
            }
            None
        } else {
            let Ok(id) = f[3].parse::<RegionId>() else {
                report.reject(RejectReason::Malformed);
                continue;
            };
            if state.is_some_and(|s| s.fips != id.state_code()) {
                report.reject(RejectReason::StateMismatch);
                continue;
            }
            Some(id)
        };
        if fips.is_none() {
            report.missing_fips += 1;
        }
        report.accepted += 1;
        records.push(RawCaseRecord {
            date,
            county: f[1].to_string(),
            state: f[2].to_string(),
            fips,
            cases,
            deaths,
        });
    }
    Ok(Parsed { records, report })
}

/// Column names for the vaccination feed, whose upstream schema has changed
/// over time. Loaded from JSON; unspecified keys keep their defaults.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CdcColumns {
    pub date: String,
    pub state: String,
    pub doses_administered: String,
    pub people_fully_vaccinated: String,
    /// chrono format string; ISO `%Y-%m-%d` when absent.
    pub date_format: Option<String>,
}

impl Default for CdcColumns {
    fn default() -> Self {
        Self {
            date: "date".into(),
            state: "state".into(),
            doses_administered: "doses_administered".into(),
            people_fully_vaccinated: "people_fully_vaccinated".into(),
            date_format: None,
        }
    }
}

impl CdcColumns {
    pub fn from_json(text: &str) -> Result<Self, IngestError> {
        serde_json::from_str(text).map_err(|e| IngestError::Mapping(e.to_string()))
    }
}

/// State-level cumulative vaccination counts. State text may be a postal
/// code or a name and is normalized to the postal code.
pub fn parse_cdc<R: Read>(input: R, columns: &CdcColumns) -> Result<Parsed<RawVaccinationRecord>, IngestError> {
    let names = [
        columns.date.as_str(),
        columns.state.as_str(),
        columns.doses_administered.as_str(),
        columns.people_fully_vaccinated.as_str(),
    ];
    let mut rows = Rows::open(input, &names)?;
    let parse_date = |s: &str| match &columns.date_format {
        None => parse_iso_date(s),
        Some(fmt) => NaiveDate::parse_from_str(s, fmt).ok(),
    };
    let mut report = IngestReport::new(Source::Cdc);
    let mut records = Vec::new();
    while let Some(row) = rows.next()? {
        report.rows += 1;
        let Row::Fields(f) = row else {
            report.reject(RejectReason::Malformed);
            continue;
        };
        let (Some(date), Some(doses), Some(full)) = (parse_date(f[0]), count(f[2]), count(f[3])) else {
            report.reject(RejectReason::Malformed);
            continue;
        };
        let Some(state) = normalize_state(f[1]) else {
            report.reject(RejectReason::UnknownState);
            continue;
        };
        report.accepted += 1;
        records.push(RawVaccinationRecord {
            date,
            state: state.region_id(),
            doses_administered: doses,
            people_fully_vaccinated: full,
        });
    }
    Ok(Parsed { records, report })
}

/// `fips,population`; the last row for a FIPS code wins.
pub fn parse_census<R: Read>(input: R) -> Result<Parsed<CensusRecord>, IngestError> {
    let mut rows = Rows::open(input, &["fips", "population"])?;
    let mut report = IngestReport::new(Source::Census);
    let mut records: Vec<CensusRecord> = Vec::new();
    let mut seen: HashMap<RegionId, usize> = HashMap::new();
    while let Some(row) = rows.next()? {
        report.rows += 1;
        let Row::Fields(f) = row else {
            report.reject(RejectReason::Malformed);
            continue;
        };
        let (Ok(fips), Ok(population)) = (f[0].parse::<RegionId>(), f[1].parse::<i64>()) else {
            report.reject(RejectReason::Malformed);
            continue;
        };
        if population <= 0 {
            report.reject(RejectReason::NonPositivePopulation);
            continue;
        }
        report.accepted += 1;
        let record = CensusRecord {
            fips,
            population: population as u64,
        };
        match seen.get(&fips) {
            Some(&i) => {
                report.duplicates += 1;
                records[i] = record;
            }
            None => {
                seen.insert(fips, records.len());
                records.push(record);
            }
        }
    }
    Ok(Parsed { records, report })
}

/// `zip,fips,weight`. A ZIP whose weights sum to within 1e-3 of 1 is
/// renormalized to sum exactly 1; otherwise all of its rows are rejected.
pub fn parse_crosswalk<R: Read>(input: R) -> Result<Parsed<CrosswalkEntry>, IngestError> {
    let mut rows = Rows::open(input, &["zip", "fips", "weight"])?;
    let mut report = IngestReport::new(Source::Crosswalk);
    let mut order: Vec<ZipCode> = Vec::new();
    let mut groups: HashMap<ZipCode, Vec<CrosswalkEntry>> = HashMap::new();
    while let Some(row) = rows.next()? {
        report.rows += 1;
        let Row::Fields(f) = row else {
            report.reject(RejectReason::Malformed);
            continue;
        };
        let (Ok(zip), Ok(fips), Ok(weight)) = (f[0].parse::<ZipCode>(), f[1].parse::<RegionId>(), f[2].parse::<f64>())
        else {
            report.reject(RejectReason::Malformed);
            continue;
        };
        if !(0.0..=1.0).contains(&weight) {
            report.reject(RejectReason::WeightOutOfRange);
            continue;
        }
        groups
            .entry(zip)
            .or_insert_with(|| {
                order.push(zip);
                Vec::new()
            })
            .push(CrosswalkEntry { zip, fips, weight });
    }
    let mut records = Vec::new();
    for zip in order {
        let mut group = groups.remove(&zip).expect("grouped");
        let total = atlas_core::numeric::compensated_sum(group.iter().map(|e| e.weight));
        if (total - 1.0).abs() > CROSSWALK_TOLERANCE || total <= 0.0 {
            for _ in &group {
                report.reject(RejectReason::WeightSum);
            }
            continue;
        }
        for e in &mut group {
            e.weight /= total;
        }
        report.accepted += group.len() as u64;
        records.extend(group);
    }
    Ok(Parsed { records, report })
}

/// `fips,month,visits,poi_count,naics_prefix`; rows sharing
/// `(fips, month, naics_prefix)` are merged by summing their counts.
pub fn parse_patterns<R: Read>(input: R) -> Result<Parsed<PatternsRecord>, IngestError> {
    let mut rows = Rows::open(input, &["fips", "month", "visits", "poi_count", "naics_prefix"])?;
    let mut report = IngestReport::new(Source::Patterns);
    let mut grouped: std::collections::BTreeMap<(RegionId, YearMonth, u8), PatternsRecord> = Default::default();
    while let Some(row) = rows.next()? {
        report.rows += 1;
        let Row::Fields(f) = row else {
            report.reject(RejectReason::Malformed);
            continue;
        };
        let Ok(month) = f[1].parse::<YearMonth>() else {
            report.reject(RejectReason::BadMonth);
            continue;
        };
        let naics = (f[4].len() == 2).then(|| f[4].parse::<u8>().ok()).flatten();
        let (Ok(fips), Some(visits), Some(poi_count), Some(naics_prefix)) =
            (f[0].parse::<RegionId>(), count(f[2]), count(f[3]), naics)
        else {
            report.reject(RejectReason::Malformed);
            continue;
        };
        report.accepted += 1;
        grouped
            .entry((fips, month, naics_prefix))
            .and_modify(|r| {
                r.visits += visits;
                r.poi_count += poi_count;
                report.duplicates += 1;
            })
            .or_insert(PatternsRecord {
                fips,
                month,
                visits,
                poi_count,
                naics_prefix,
            });
    }
    Ok(Parsed {
        records: grouped.into_values().collect(),
        report,
    })
}
