//! Ordered per-region time series and the transforms used for charting.

use alloc::vec::Vec;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::metric::MetricKind;
use crate::numeric::compensated_sum;
use crate::region::RegionId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub date: NaiveDate,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    pub region: RegionId,
    pub metric: MetricKind,
    pub points: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SeriesError {
    #[error("series dates must be strictly increasing (violated at {0})")]
    Unordered(NaiveDate),
    #[error("`{0}` is not a cumulative metric")]
    NotCumulative(MetricKind),
    #[error("rolling window must be at least 1")]
    Window,
    #[error("population must be positive")]
    Population,
    #[error("query range is inverted: {from} > {to}")]
    Range { from: NaiveDate, to: NaiveDate },
}

impl MetricSeries {
    pub fn new(region: RegionId, metric: MetricKind, points: Vec<Point>) -> Result<Self, SeriesError> {
        if let Some(w) = points.windows(2).find(|w| w[0].date >= w[1].date) {
            return Err(SeriesError::Unordered(w[1].date));
        }
        Ok(Self { region, metric, points })
    }

    pub fn empty(region: RegionId, metric: MetricKind) -> Self {
        Self {
            region,
            metric,
            points: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.value)
    }

    fn with_values<I: IntoIterator<Item = f64>>(&self, metric: MetricKind, values: I) -> Self {
        Self {
            region: self.region,
            metric,
            points: self
                .points
                .iter()
                .zip(values)
                .map(|(p, value)| Point { date: p.date, value })
                .collect(),
        }
    }
}

/// Daily increments of a cumulative series: `d[0] = x[0]`, `d[i] = x[i] - x[i-1]`.
///
/// Negative increments (upstream corrections) are kept as-is.
pub fn diff_cumulative(series: &MetricSeries) -> Result<MetricSeries, SeriesError> {
    let daily = series
        .metric
        .daily_counterpart()
        .ok_or(SeriesError::NotCumulative(series.metric))?;
    let mut prev = 0.0;
    let values: Vec<f64> = series
        .values()
        .map(|v| {
            let d = v - prev;
            prev = v;
            d
        })
        .collect();
    Ok(series.with_values(daily, values))
}

/// Running sum of a series, keeping its metric. Inverse of [`diff_cumulative`]
/// on the values.
pub fn cumulative_sum(series: &MetricSeries) -> MetricSeries {
    let mut acc = 0.0;
    let values: Vec<f64> = series
        .values()
        .map(|v| {
            acc += v;
            acc
        })
        .collect();
    series.with_values(series.metric, values)
}

/// Trailing mean over the last `window` points; the first `window - 1`
/// outputs average over however many points exist so far.
pub fn rolling_average(series: &MetricSeries, window: usize) -> Result<MetricSeries, SeriesError> {
    if window < 1 {
        return Err(SeriesError::Window);
    }
    let values: Vec<f64> = series.values().collect();
    let out: Vec<f64> = (0..values.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(window);
            let slice = &values[lo..=i];
            compensated_sum(slice.iter().copied()) / slice.len() as f64
        })
        .collect();
    Ok(series.with_values(series.metric, out))
}

pub const PER_CAPITA_BASE: f64 = 100_000.0;

/// Scale every value by `base / population`.
pub fn per_capita(series: &MetricSeries, population: u64, base: f64) -> Result<MetricSeries, SeriesError> {
    if population == 0 {
        return Err(SeriesError::Population);
    }
    let scale = base / population as f64;
    let values: Vec<f64> = series.values().map(|v| v * scale).collect();
    Ok(series.with_values(series.metric, values))
}
