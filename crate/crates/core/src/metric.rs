//! Metric kinds and their display qualifiers.

use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::region::Level;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    CasesCum,
    DeathsCum,
    CasesDaily,
    DeathsDaily,
    VaxDosesCum,
    VaxFullCum,
    VaxDosesDaily,
    VaxFullDaily,
    VisitsMonthly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cadence {
    Daily,
    Monthly,
}

impl MetricKind {
    pub const ALL: [MetricKind; 9] = [
        MetricKind::CasesCum,
        MetricKind::DeathsCum,
        MetricKind::CasesDaily,
        MetricKind::DeathsDaily,
        MetricKind::VaxDosesCum,
        MetricKind::VaxFullCum,
        MetricKind::VaxDosesDaily,
        MetricKind::VaxFullDaily,
        MetricKind::VisitsMonthly,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::CasesCum => "cases_cum",
            MetricKind::DeathsCum => "deaths_cum",
            MetricKind::CasesDaily => "cases_daily",
            MetricKind::DeathsDaily => "deaths_daily",
            MetricKind::VaxDosesCum => "vax_doses_cum",
            MetricKind::VaxFullCum => "vax_full_cum",
            MetricKind::VaxDosesDaily => "vax_doses_daily",
            MetricKind::VaxFullDaily => "vax_full_daily",
            MetricKind::VisitsMonthly => "visits_monthly",
        }
    }

    pub fn is_cumulative(&self) -> bool {
        matches!(
            self,
            MetricKind::CasesCum | MetricKind::DeathsCum | MetricKind::VaxDosesCum | MetricKind::VaxFullCum
        )
    }

    /// Daily series derived from a cumulative one; `None` for non-cumulative kinds.
    pub fn daily_counterpart(&self) -> Option<MetricKind> {
        match self {
            MetricKind::CasesCum => Some(MetricKind::CasesDaily),
            MetricKind::DeathsCum => Some(MetricKind::DeathsDaily),
            MetricKind::VaxDosesCum => Some(MetricKind::VaxDosesDaily),
            MetricKind::VaxFullCum => Some(MetricKind::VaxFullDaily),
            _ => None,
        }
    }

    /// The series surprise is computed on: daily increments for cumulative
    /// metrics, the metric itself otherwise.
    pub fn surprise_basis(&self) -> MetricKind {
        self.daily_counterpart().unwrap_or(*self)
    }

    pub fn cadence(&self) -> Cadence {
        match self {
            MetricKind::VisitsMonthly => Cadence::Monthly,
            _ => Cadence::Daily,
        }
    }

    /// Geographic resolution the metric is published at.
    pub fn level(&self) -> Level {
        match self {
            MetricKind::VaxDosesCum | MetricKind::VaxFullCum | MetricKind::VaxDosesDaily | MetricKind::VaxFullDaily => {
                Level::State
            }
            _ => Level::County,
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("unknown metric")]
pub struct UnknownMetric;

impl FromStr for MetricKind {
    type Err = UnknownMetric;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MetricKind::ALL.into_iter().find(|m| m.name() == s).ok_or(UnknownMetric)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Qualifier {
    #[default]
    Raw,
    PerCapita,
    Rolling7,
}

/// A metric plus the derived view requested for display.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MetricView {
    pub metric: MetricKind,
    pub qualifier: Qualifier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("rolling averages apply only to daily or monthly metrics, not `{0}`")]
pub struct InvalidQualifier(pub MetricKind);

impl MetricView {
    pub fn new(metric: MetricKind, qualifier: Qualifier) -> Result<Self, InvalidQualifier> {
        if qualifier == Qualifier::Rolling7 && metric.is_cumulative() {
            return Err(InvalidQualifier(metric));
        }
        Ok(Self { metric, qualifier })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for m in MetricKind::ALL {
            assert_eq!(m.name().parse::<MetricKind>().unwrap(), m);
        }
        assert!("cases".parse::<MetricKind>().is_err());
    }

    #[test]
    fn qualifier_rules() {
        assert!(MetricView::new(MetricKind::CasesCum, Qualifier::Rolling7).is_err());
        assert!(MetricView::new(MetricKind::CasesCum, Qualifier::PerCapita).is_ok());
        assert!(MetricView::new(MetricKind::VisitsMonthly, Qualifier::Rolling7).is_ok());
        assert!(MetricView::new(MetricKind::DeathsDaily, Qualifier::Rolling7).is_ok());
    }

    #[test]
    fn surprise_basis_is_daily() {
        assert_eq!(MetricKind::CasesCum.surprise_basis(), MetricKind::CasesDaily);
        assert_eq!(MetricKind::CasesDaily.surprise_basis(), MetricKind::CasesDaily);
        assert_eq!(MetricKind::VaxFullCum.surprise_basis(), MetricKind::VaxFullDaily);
        assert_eq!(MetricKind::VisitsMonthly.surprise_basis(), MetricKind::VisitsMonthly);
    }
}
