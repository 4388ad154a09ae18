//! Immutable, versioned view over every stored series.
//!
//! `(region, metric, date)` is the primary key for observations. A snapshot
//! never changes once built; [`Snapshot::apply`] returns a successor with the
//! version incremented. Series bodies are shared between versions, so the
//! cost of an upsert is proportional to the series it touches.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::metric::MetricKind;
use crate::numeric::CompensatedSum;
use crate::records::{Record, ZipCode};
use crate::region::{Level, RegionId};
use crate::series::{MetricSeries, Point, SeriesError};
use crate::time::YearMonth;

type Body = BTreeMap<NaiveDate, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct SeriesKey {
    metric: MetricKind,
    region: RegionId,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(into = "SnapshotRepr", from = "SnapshotRepr")]
pub struct Snapshot {
    version: u64,
    series: BTreeMap<SeriesKey, Arc<Body>>,
    populations: BTreeMap<RegionId, u64>,
    names: BTreeMap<RegionId, String>,
    crosswalk: BTreeMap<ZipCode, Vec<(RegionId, f64)>>,
    pois: BTreeMap<(RegionId, YearMonth, u8), u64>,
}

/// Result of [`Snapshot::query_series`]; `found` is false when the region is
/// unknown to the snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesQuery {
    pub series: MetricSeries,
    pub found: bool,
}

impl Snapshot {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    /// Successor snapshot with `records` applied (last write wins) and the
    /// daily counterpart of every touched cumulative series re-derived.
    pub fn apply(&self, records: &[Record]) -> Snapshot {
        let mut next = self.clone();
        next.version = self.version + 1;
        let mut touched = BTreeSet::new();
        for record in records {
            match record {
                Record::Observation {
                    region,
                    metric,
                    date,
                    value,
                } => {
                    let key = SeriesKey {
                        metric: *metric,
                        region: *region,
                    };
                    Arc::make_mut(next.series.entry(key).or_default()).insert(*date, *value);
                    if metric.is_cumulative() {
                        touched.insert(key);
                    }
                }
                Record::Population { region, population } => {
                    next.populations.insert(*region, *population);
                }
                Record::Name { region, name } => {
                    next.names.insert(*region, name.clone());
                }
                Record::Crosswalk { zip, entries } => {
                    next.crosswalk.insert(*zip, entries.clone());
                }
                Record::PointsOfInterest {
                    region,
                    month,
                    naics,
                    count,
                } => {
                    next.pois.insert((*region, *month, *naics), *count);
                }
            }
        }
        for key in touched {
            let daily = key.metric.daily_counterpart().expect("cumulative");
            let mut prev = 0.0;
            let body: Body = next.series[&key]
                .iter()
                .map(|(d, v)| {
                    let delta = v - prev;
                    prev = *v;
                    (*d, delta)
                })
                .collect();
            next.series.insert(
                SeriesKey {
                    metric: daily,
                    region: key.region,
                },
                Arc::new(body),
            );
        }
        next
    }

    /// Points in `[from, to]`, ordered, with no zero-fill.
    pub fn query_series(
        &self,
        region: RegionId,
        metric: MetricKind,
        from: NaiveDate,
        to: NaiveDate,
    ) -> Result<SeriesQuery, SeriesError> {
        if from > to {
            return Err(SeriesError::Range { from, to });
        }
        let points = self
            .body(region, metric)
            .map(|b| {
                b.range(from..=to)
                    .map(|(date, value)| Point {
                        date: *date,
                        value: *value,
                    })
                    .collect()
            })
            .unwrap_or_default();
        Ok(SeriesQuery {
            series: MetricSeries { region, metric, points },
            found: self.contains_region(region),
        })
    }

    /// The whole stored series, if any.
    pub fn series(&self, region: RegionId, metric: MetricKind) -> Option<MetricSeries> {
        self.body(region, metric).map(|b| MetricSeries {
            region,
            metric,
            points: b
                .iter()
                .map(|(date, value)| Point {
                    date: *date,
                    value: *value,
                })
                .collect(),
        })
    }

    pub(crate) fn body(&self, region: RegionId, metric: MetricKind) -> Option<&Body> {
        self.series.get(&SeriesKey { metric, region }).map(|b| b.as_ref())
    }

    /// Every (region, series body) stored for `metric`, ordered by region.
    pub(crate) fn metric_bodies(&self, metric: MetricKind) -> impl Iterator<Item = (RegionId, &Body)> {
        let lo = SeriesKey {
            metric,
            region: RegionId::State(0),
        };
        self.series
            .range(lo..)
            .take_while(move |(k, _)| k.metric == metric)
            .map(|(k, b)| (k.region, b.as_ref()))
    }

    pub fn iter_series(&self) -> impl Iterator<Item = MetricSeries> + '_ {
        self.series.iter().map(|(k, b)| MetricSeries {
            region: k.region,
            metric: k.metric,
            points: b
                .iter()
                .map(|(date, value)| Point {
                    date: *date,
                    value: *value,
                })
                .collect(),
        })
    }

    /// Regions that have a value for `metric` on `date`.
    pub fn values_at(&self, metric: MetricKind, date: NaiveDate) -> BTreeMap<RegionId, f64> {
        self.metric_bodies(metric)
            .filter_map(|(region, body)| body.get(&date).map(|v| (region, *v)))
            .collect()
    }

    /// Sum over counties sharing each state prefix plus any value stored
    /// against the state itself. States with nothing to sum are absent.
    pub fn aggregate_to_state(&self, metric: MetricKind, date: NaiveDate) -> BTreeMap<RegionId, f64> {
        let mut sums: BTreeMap<RegionId, CompensatedSum> = BTreeMap::new();
        for (region, value) in self.values_at(metric, date) {
            sums.entry(region.containing_state()).or_default().add(value);
        }
        sums.into_iter().map(|(k, v)| (k, v.value())).collect()
    }

    /// Census population; states without their own row fall back to the sum
    /// of their counties.
    pub fn population(&self, region: RegionId) -> Option<u64> {
        if let Some(p) = self.populations.get(&region) {
            return Some(*p);
        }
        match region {
            RegionId::County(_) => None,
            RegionId::State(s) => {
                let lo = RegionId::County(s as u32 * 1000);
                let hi = RegionId::County(s as u32 * 1000 + 999);
                let total: u64 = self.populations.range(lo..=hi).map(|(_, p)| *p).sum();
                (total > 0).then_some(total)
            }
        }
    }

    pub fn populations(&self) -> impl Iterator<Item = (RegionId, u64)> + '_ {
        self.populations.iter().map(|(r, p)| (*r, *p))
    }

    pub fn name(&self, region: RegionId) -> String {
        if let Some(n) = self.names.get(&region) {
            return n.clone();
        }
        match region {
            RegionId::State(_) => region.state_info().name.to_string(),
            RegionId::County(_) => region.to_string(),
        }
    }

    pub fn names(&self) -> impl Iterator<Item = (RegionId, &str)> + '_ {
        self.names.iter().map(|(r, n)| (*r, n.as_str()))
    }

    pub fn contains_region(&self, region: RegionId) -> bool {
        self.populations.contains_key(&region)
            || self.names.contains_key(&region)
            || self.series.keys().any(|k| k.region == region)
    }

    /// Every region referenced anywhere in the snapshot.
    pub fn regions(&self) -> BTreeSet<RegionId> {
        self.series
            .keys()
            .map(|k| k.region)
            .chain(self.populations.keys().copied())
            .chain(self.names.keys().copied())
            .collect()
    }

    pub fn region_count(&self, level: Level) -> usize {
        self.regions().iter().filter(|r| r.level() == level).count()
    }

    pub fn has_metric(&self, metric: MetricKind) -> bool {
        self.metric_bodies(metric).any(|(_, b)| !b.is_empty())
    }

    /// All dates with at least one value for `metric`.
    pub fn metric_dates(&self, metric: MetricKind) -> BTreeSet<NaiveDate> {
        self.metric_bodies(metric)
            .flat_map(|(_, b)| b.keys().copied())
            .collect()
    }

    pub fn metric_bounds(&self, metric: MetricKind) -> Option<(NaiveDate, NaiveDate)> {
        bounds(self.metric_bodies(metric).map(|(_, b)| b))
    }

    /// First and last date across every stored series.
    pub fn date_bounds(&self) -> Option<(NaiveDate, NaiveDate)> {
        bounds(self.series.values().map(|b| b.as_ref()))
    }

    pub fn crosswalk(&self, zip: ZipCode) -> Option<&[(RegionId, f64)]> {
        self.crosswalk.get(&zip).map(Vec::as_slice)
    }

    pub fn crosswalk_entries(&self) -> impl Iterator<Item = (ZipCode, &[(RegionId, f64)])> + '_ {
        self.crosswalk.iter().map(|(z, e)| (*z, e.as_slice()))
    }

    /// Distribute ZIP-keyed quantities onto counties by crosswalk weight.
    /// Unmapped ZIPs are returned separately.
    pub fn apportion_zip<I>(&self, values: I) -> (BTreeMap<RegionId, f64>, Vec<ZipCode>)
    where
        I: IntoIterator<Item = (ZipCode, f64)>,
    {
        let mut sums: BTreeMap<RegionId, CompensatedSum> = BTreeMap::new();
        let mut unmapped = Vec::new();
        for (zip, value) in values {
            match self.crosswalk.get(&zip) {
                Some(entries) => {
                    for (fips, w) in entries {
                        sums.entry(*fips).or_default().add(value * w);
                    }
                }
                None => unmapped.push(zip),
            }
        }
        (sums.into_iter().map(|(r, s)| (r, s.value())).collect(), unmapped)
    }

    /// POI counts for a region as `(month, naics sector, count)`.
    pub fn poi_counts(&self, region: RegionId) -> impl Iterator<Item = (YearMonth, u8, u64)> + '_ {
        self.pois
            .iter()
            .filter(move |((r, _, _), _)| *r == region)
            .map(|((_, m, n), c)| (*m, *n, *c))
    }
}

fn bounds<'a, I: Iterator<Item = &'a Body>>(bodies: I) -> Option<(NaiveDate, NaiveDate)> {
    bodies.fold(None, |acc, b| {
        let (Some(lo), Some(hi)) = (b.keys().next(), b.keys().next_back()) else {
            return acc;
        };
        Some(match acc {
            None => (*lo, *hi),
            Some((a, z)) => (a.min(*lo), z.max(*hi)),
        })
    })
}

#[derive(Serialize, Deserialize)]
struct SeriesRepr {
    region: RegionId,
    metric: MetricKind,
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SnapshotRepr {
    version: u64,
    series: Vec<SeriesRepr>,
    populations: Vec<(RegionId, u64)>,
    names: Vec<(RegionId, String)>,
    crosswalk: Vec<(ZipCode, Vec<(RegionId, f64)>)>,
    pois: Vec<(RegionId, YearMonth, u8, u64)>,
}

impl From<Snapshot> for SnapshotRepr {
    fn from(s: Snapshot) -> Self {
        SnapshotRepr {
            version: s.version,
            series: s
                .series
                .iter()
                .map(|(k, b)| SeriesRepr {
                    region: k.region,
                    metric: k.metric,
                    dates: b.keys().copied().collect(),
                    values: b.values().copied().collect(),
                })
                .collect(),
            populations: s.populations.into_iter().collect(),
            names: s.names.into_iter().collect(),
            crosswalk: s.crosswalk.into_iter().collect(),
            pois: s.pois.into_iter().map(|((r, m, n), c)| (r, m, n, c)).collect(),
        }
    }
}

impl From<SnapshotRepr> for Snapshot {
    fn from(r: SnapshotRepr) -> Self {
        Snapshot {
            version: r.version,
            series: r
                .series
                .into_iter()
                .map(|s| {
                    (
                        SeriesKey {
                            metric: s.metric,
                            region: s.region,
                        },
                        Arc::new(s.dates.into_iter().zip(s.values).collect()),
                    )
                })
                .collect(),
            populations: r.populations.into_iter().collect(),
            names: r.names.into_iter().collect(),
            crosswalk: r.crosswalk.into_iter().collect(),
            pois: r.pois.into_iter().map(|(r, m, n, c)| ((r, m, n), c)).collect(),
        }
    }
}
