//! Core primitives for surprise-weighted epidemic choropleths.
//!
//! This crate is `no_std` (it needs `alloc`) and carries everything that is a
//! pure function of in-memory data:
//!
//! * [`region`]: FIPS-keyed region identifiers, the state lookup table and
//!   the West/Midwest/South/East grouping.
//! * [`metric`] and [`series`]: metric kinds and the series transforms used by
//!   line charts (daily deltas, rolling averages, per-capita rates).
//! * [`snapshot`]: an immutable, versioned view over every stored series with
//!   last-write-wins upsert semantics.
//! * [`surprise`]: the Bayesian surprise engine (model space, likelihoods,
//!   belief updating, KL divergence in bits, per-region signed surprise).
//!
//! File formats, persistence, HTTP and the command line live in the `atlas`
//! crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod metric;
pub mod numeric;
pub mod records;
pub mod region;
pub mod series;
pub mod snapshot;
pub mod surprise;
pub mod time;

pub use chrono::NaiveDate;

pub use crate::metric::{Cadence, MetricKind, MetricView, Qualifier};
pub use crate::records::{CensusRecord, CrosswalkEntry, PatternsRecord, RawCaseRecord, RawVaccinationRecord, Record};
pub use crate::region::{Level, Region, RegionGroup, RegionId, RegionIdError, StateInfo};
pub use crate::series::{MetricSeries, Point, SeriesError};
pub use crate::snapshot::{SeriesQuery, Snapshot};
pub use crate::surprise::{BeliefState, ModelKind, ModelSpec, SurpriseEntry, SurpriseError, SurpriseFrame};
pub use crate::time::YearMonth;
