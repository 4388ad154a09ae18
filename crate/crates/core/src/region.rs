//! FIPS-keyed regions, the built-in state table, and census region groups.

use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Spatial resolution of a [`RegionId`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    State,
    County,
}

/// A FIPS code: two digits for a state, five for a county.
///
/// States order before counties; within a level codes order numerically, so
/// the derived ordering matches the lexicographic order of the padded codes
/// at each level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RegionId {
    State(u8),
    County(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegionIdError {
    #[error("FIPS code `{0}` is neither 2 nor 5 ASCII digits")]
    Format(String),
    #[error("FIPS code `{0}` does not start with a known state code")]
    UnknownState(String),
}

impl RegionId {
    pub fn state(code: u8) -> Result<Self, RegionIdError> {
        if state_by_fips(code).is_none() {
            return Err(RegionIdError::UnknownState(alloc::format!("{code:02}")));
        }
        Ok(RegionId::State(code))
    }

    pub fn county(code: u32) -> Result<Self, RegionIdError> {
        if code > 99_999 {
            return Err(RegionIdError::Format(alloc::format!("{code}")));
        }
        if state_by_fips((code / 1000) as u8).is_none() {
            return Err(RegionIdError::UnknownState(alloc::format!("{code:05}")));
        }
        Ok(RegionId::County(code))
    }

    pub fn level(&self) -> Level {
        match self {
            RegionId::State(_) => Level::State,
            RegionId::County(_) => Level::County,
        }
    }

    /// Two-digit state code (the first two digits of a county code).
    pub fn state_code(&self) -> u8 {
        match *self {
            RegionId::State(s) => s,
            RegionId::County(c) => (c / 1000) as u8,
        }
    }

    pub fn containing_state(&self) -> RegionId {
        RegionId::State(self.state_code())
    }

    pub fn state_info(&self) -> &'static StateInfo {
        // Constructors guarantee the prefix is present in the table.
        state_by_fips(self.state_code()).expect("validated state prefix")
    }

    pub fn group(&self) -> Option<RegionGroup> {
        self.state_info().group
    }
}

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegionId::State(s) => write!(f, "{s:02}"),
            RegionId::County(c) => write!(f, "{c:05}"),
        }
    }
}

impl FromStr for RegionId {
    type Err = RegionIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(RegionIdError::Format(s.into()));
        }
        match s.len() {
            2 => RegionId::state(s.parse().expect("two digits")),
            5 => RegionId::county(s.parse().expect("five digits")),
            _ => Err(RegionIdError::Format(s.into())),
        }
    }
}

impl Serialize for RegionId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RegionId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A county or state with its display name and population, when known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub id: RegionId,
    pub name: String,
    pub population: Option<u64>,
}

impl Region {
    pub fn group(&self) -> Option<RegionGroup> {
        self.id.group()
    }
}

/// Census Bureau regions; `East` is the Northeast region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RegionGroup {
    West,
    Midwest,
    South,
    East,
}

impl RegionGroup {
    pub const ALL: [RegionGroup; 4] = [
        RegionGroup::West,
        RegionGroup::Midwest,
        RegionGroup::South,
        RegionGroup::East,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            RegionGroup::West => "West",
            RegionGroup::Midwest => "Midwest",
            RegionGroup::South => "South",
            RegionGroup::East => "East",
        }
    }

    /// Case-insensitive; `Northeast` is accepted as an alias of `East`.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("northeast") {
            return Some(RegionGroup::East);
        }
        Self::ALL.into_iter().find(|g| g.name().eq_ignore_ascii_case(s))
    }

    pub fn members(&self) -> impl Iterator<Item = &'static StateInfo> + '_ {
        STATES.iter().filter(move |s| s.group == Some(*self))
    }

    pub fn contains(&self, region: RegionId) -> bool {
        region.group() == Some(*self)
    }
}

impl fmt::Display for RegionGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateInfo {
    pub fips: u8,
    pub postal: &'static str,
    pub name: &'static str,
    /// `None` for territories.
    pub group: Option<RegionGroup>,
}

impl StateInfo {
    pub fn region_id(&self) -> RegionId {
        RegionId::State(self.fips)
    }
}

macro_rules! states {
    ($(($fips:expr, $postal:expr, $name:expr, $group:expr)),* $(,)?) => {
        &[$(StateInfo { fips: $fips, postal: $postal, name: $name, group: $group }),*]
    };
}

use RegionGroup::{East as E, Midwest as MW, South as S, West as W};

/// 50 states, DC, and the territories that appear in public COVID feeds.
pub static STATES: &[StateInfo] = states![
    (1, "AL", "Alabama", Some(S)),
    (2, "AK", "Alaska", Some(W)),
    (4, "AZ", "Arizona", Some(W)),
    (5, "AR", "Arkansas", Some(S)),
    (6, "CA", "California", Some(W)),
    (8, "CO", "Colorado", Some(W)),
    (9, "CT", "Connecticut", Some(E)),
    (10, "DE", "Delaware", Some(S)),
    (11, "DC", "District of Columbia", Some(S)),
    (12, "FL", "Florida", Some(S)),
    (13, "GA", "Georgia", Some(S)),
    (15, "HI", "Hawaii", Some(W)),
    (16, "ID", "Idaho", Some(W)),
    (17, "IL", "Illinois", Some(MW)),
    (18, "IN", "Indiana", Some(MW)),
    (19, "IA", "Iowa", Some(MW)),
    (20, "KS", "Kansas", Some(MW)),
    (21, "KY", "Kentucky", Some(S)),
    (22, "LA", "Louisiana", Some(S)),
    (23, "ME", "Maine", Some(E)),
    (24, "MD", "Maryland", Some(S)),
    (25, "MA", "Massachusetts", Some(E)),
    (26, "MI", "Michigan", Some(MW)),
    (27, "MN", "Minnesota", Some(MW)),
    (28, "MS", "Mississippi", Some(S)),
    (29, "MO", "Missouri", Some(MW)),
    (30, "MT", "Montana", Some(W)),
    (31, "NE", "Nebraska", Some(MW)),
    (32, "NV", "Nevada", Some(W)),
    (33, "NH", "New Hampshire", Some(E)),
    (34, "NJ", "New Jersey", Some(E)),
    (35, "NM", "New Mexico", Some(W)),
    (36, "NY", "New York", Some(E)),
    (37, "NC", "North Carolina", Some(S)),
    (38, "ND", "North Dakota", Some(MW)),
    (39, "OH", "Ohio", Some(MW)),
    (40, "OK", "Oklahoma", Some(S)),
    (41, "OR", "Oregon", Some(W)),
    (42, "PA", "Pennsylvania", Some(E)),
    (44, "RI", "Rhode Island", Some(E)),
    (45, "SC", "South Carolina", Some(S)),
    (46, "SD", "South Dakota", Some(MW)),
    (47, "TN", "Tennessee", Some(S)),
    (48, "TX", "Texas", Some(S)),
    (49, "UT", "Utah", Some(W)),
    (50, "VT", "Vermont", Some(E)),
    (51, "VA", "Virginia", Some(S)),
    (53, "WA", "Washington", Some(W)),
    (54, "WV", "West Virginia", Some(S)),
    (55, "WI", "Wisconsin", Some(MW)),
    (56, "WY", "Wyoming", Some(W)),
    (60, "AS", "American Samoa", None),
    (66, "GU", "Guam", None),
    (69, "MP", "Northern Mariana Islands", None),
    (72, "PR", "Puerto Rico", None),
    (78, "VI", "Virgin Islands", None),
];

pub fn state_by_fips(fips: u8) -> Option<&'static StateInfo> {
    STATES.iter().find(|s| s.fips == fips)
}

pub fn state_by_postal(postal: &str) -> Option<&'static StateInfo> {
    STATES.iter().find(|s| s.postal.eq_ignore_ascii_case(postal))
}

/// Resolve free-form state text: postal code, full name, or a common alias.
pub fn normalize_state(text: &str) -> Option<&'static StateInfo> {
    let t = text.trim();
    if t.len() == 2 {
        if let Some(s) = state_by_postal(t) {
            return Some(s);
        }
    }
    if let Some(s) = STATES.iter().find(|s| s.name.eq_ignore_ascii_case(t)) {
        return Some(s);
    }
    let alias = match t.to_ascii_lowercase().as_str() {
        "washington dc" | "washington, d.c." | "d.c." => "DC",
        "u.s. virgin islands" | "us virgin islands" => "VI",
        "northern mariana islands" | "commonwealth of the northern mariana islands" => "MP",
        "new york state" => "NY",
        _ => return None,
    };
    state_by_postal(alias)
}
