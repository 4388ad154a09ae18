use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Which upstream feed a file came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Nyt,
    Cdc,
    Census,
    Crosswalk,
    Patterns,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Source::Nyt => "nyt",
            Source::Cdc => "cdc",
            Source::Census => "census",
            Source::Crosswalk => "crosswalk",
            Source::Patterns => "patterns",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    /// Unparseable field, missing field, or undecodable row.
    Malformed,
    UnknownState,
    /// County FIPS prefix disagrees with the state column.
    StateMismatch,
    NonPositivePopulation,
    WeightOutOfRange,
    /// The ZIP's weights do not sum to 1 within tolerance.
    WeightSum,
    BadMonth,
}

/// Per-file ingest accounting. `accepted + rejected = rows` always holds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub source: Source,
    pub rows: u64,
    pub accepted: u64,
    pub rejected: BTreeMap<RejectReason, u64>,
    /// Accepted rows that replaced an earlier row with the same key.
    pub duplicates: u64,
    /// Accepted rows without a FIPS code (kept for state totals only).
    pub missing_fips: u64,
}

impl IngestReport {
    pub fn new(source: Source) -> Self {
        Self {
            source,
            rows: 0,
            accepted: 0,
            rejected: BTreeMap::new(),
            duplicates: 0,
            missing_fips: 0,
        }
    }

    pub fn reject(&mut self, reason: RejectReason) {
        *self.rejected.entry(reason).or_default() += 1;
    }

    pub fn count(&self, reason: RejectReason) -> u64 {
        self.rejected.get(&reason).copied().unwrap_or(0)
    }

    pub fn rejected_total(&self) -> u64 {
        self.rejected.values().sum()
    }

    pub fn is_clean(&self) -> bool {
        self.rejected_total() == 0
    }
}
