use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::SurpriseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    /// Events spread evenly across regions regardless of size.
    Uniform,
    /// Every region shares the global per-capita rate.
    PopulationProportional,
    /// Events follow that month's foot-traffic share.
    FootTrafficProportional,
    /// Each region repeats its own mean rate over the previous `window` steps.
    TrailingBaseRate { window: u32 },
}

/// A named model in the catalog.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: ModelKind,
}

pub const DEFAULT_TRAILING_WINDOW: u32 = 14;

impl ModelSpec {
    pub fn new(kind: ModelKind) -> Result<Self, SurpriseError> {
        let name = match kind {
            ModelKind::Uniform => "uniform".into(),
            ModelKind::PopulationProportional => "population_proportional".into(),
            ModelKind::FootTrafficProportional => "foot_traffic_proportional".into(),
            ModelKind::TrailingBaseRate { window: 0 } => return Err(SurpriseError::Window),
            ModelKind::TrailingBaseRate { window } => format!("trailing_base_rate_{window}"),
        };
        Ok(Self { name, kind })
    }

    /// Accepts catalog names; `trailing_base_rate` alone means the default
    /// 14-day window and `trailing_base_rate_<k>` picks `k`.
    pub fn parse(name: &str) -> Result<Self, SurpriseError> {
        let kind = match name.trim() {
            "uniform" => ModelKind::Uniform,
            "population_proportional" => ModelKind::PopulationProportional,
            "foot_traffic_proportional" => ModelKind::FootTrafficProportional,
            "trailing_base_rate" => ModelKind::TrailingBaseRate {
                window: DEFAULT_TRAILING_WINDOW,
            },
            other => match other
                .strip_prefix("trailing_base_rate_")
                .and_then(|k| k.parse::<u32>().ok())
            {
                Some(window) if window >= 1 => ModelKind::TrailingBaseRate { window },
                _ => return Err(SurpriseError::UnknownModel(other.into())),
            },
        };
        Self::new(kind)
    }

    /// Comma-separated model names.
    pub fn parse_list(names: &str) -> Result<Vec<Self>, SurpriseError> {
        names
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(Self::parse)
            .collect()
    }

    /// Steps of history the model reads before the scored date.
    pub fn lookback(&self) -> usize {
        match self.kind {
            ModelKind::TrailingBaseRate { window } => window as usize,
            _ => 0,
        }
    }

    /// `{uniform, population_proportional, trailing_base_rate_14}`, plus the
    /// foot-traffic model when visit data is available.
    pub fn default_set(with_foot_traffic: bool) -> Vec<Self> {
        let mut models = vec![
            Self::new(ModelKind::Uniform).unwrap(),
            Self::new(ModelKind::PopulationProportional).unwrap(),
            Self::new(ModelKind::TrailingBaseRate {
                window: DEFAULT_TRAILING_WINDOW,
            })
            .unwrap(),
        ];
        if with_foot_traffic {
            models.push(Self::new(ModelKind::FootTrafficProportional).unwrap());
        }
        models
    }
}
