use alloc::string::String;
use alloc::vec::Vec;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::belief::{kl_bits, update_weights, BeliefState};
use super::likelihood::likelihood_unchecked;
use super::SurpriseError;
use crate::metric::MetricKind;
use crate::numeric::{compensated_sum, signum, CompensatedSum};
use crate::region::RegionId;

/// What the engine needs to score one region on one date.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionDay {
    pub region: RegionId,
    pub population: f64,
    /// Event count for the date (zero-filled when unreported).
    pub observed: f64,
    /// Expected per-capita rate under each belief model, `None` where the
    /// model abstains.
    pub expected: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurpriseEntry {
    pub fips: RegionId,
    /// Observed per-capita rate.
    pub observed: f64,
    /// Belief-weighted consensus rate over the models that did not abstain.
    pub expected: f64,
    /// KL divergence of the regional posterior from the belief, in bits.
    pub surprise: f64,
    /// `surprise` carrying the sign of `observed - expected`.
    pub signed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurpriseFrame {
    pub date: NaiveDate,
    pub metric: MetricKind,
    pub models: Vec<String>,
    pub entries: Vec<SurpriseEntry>,
    /// Regions with data but no known population.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub excluded: Vec<RegionId>,
}

impl SurpriseFrame {
    pub fn entry(&self, region: RegionId) -> Option<&SurpriseEntry> {
        self.entries
            .binary_search_by(|e| e.fips.cmp(&region))
            .ok()
            .map(|i| &self.entries[i])
    }
}

/// Score one date: per-region surprise against `belief`, and the next belief.
///
/// Entries come back ordered by region and the global update accumulates in
/// that order, so the result does not depend on the order of `regions`.
pub fn score_day(
    belief: &BeliefState,
    regions: &[RegionDay],
) -> Result<(Vec<SurpriseEntry>, BeliefState), SurpriseError> {
    let n_models = belief.len();
    for r in regions {
        if r.expected.len() != n_models {
            return Err(SurpriseError::LengthMismatch {
                left: n_models,
                right: r.expected.len(),
            });
        }
        if r.population.is_nan() || r.population <= 0.0 {
            return Err(SurpriseError::Population);
        }
    }
    let mut order: Vec<usize> = (0..regions.len()).collect();
    order.sort_by_key(|&i| regions[i].region);

    let prior = belief.weights();
    let mut log_lik: Vec<CompensatedSum> = (0..n_models).map(|_| CompensatedSum::new()).collect();
    let mut lik = Vec::with_capacity(n_models);
    let mut posterior = Vec::with_capacity(n_models);
    let mut entries = Vec::with_capacity(regions.len());

    for &i in &order {
        let r = &regions[i];
        let rate = r.observed / r.population;
        lik.clear();
        lik.extend(r.expected.iter().map(|e| match e {
            Some(p) => likelihood_unchecked(rate, *p, r.population),
            None => 1.0,
        }));
        for (acc, l) in log_lik.iter_mut().zip(&lik) {
            acc.add(libm::log(*l));
        }
        update_weights(prior, &lik, &mut posterior);
        let surprise = kl_bits(&posterior, prior);

        let active = || prior.iter().zip(&r.expected).filter_map(|(w, e)| e.map(|e| (*w, e)));
        let mass = compensated_sum(active().map(|(w, _)| w));
        let expected = if mass > 0.0 {
            compensated_sum(active().map(|(w, e)| w * e)) / mass
        } else {
            rate
        };
        entries.push(SurpriseEntry {
            fips: r.region,
            observed: rate,
            expected,
            surprise,
            // `+ 0.0` folds -0 into 0.
            signed: signum(rate - expected) * surprise + 0.0,
        });
    }

    let next = if regions.is_empty() {
        belief.clone()
    } else {
        let n = regions.len() as f64;
        let geo_mean: Vec<f64> = log_lik.iter().map(|s| libm::exp(s.value() / n)).collect();
        super::bayes_update(belief, &geo_mean)?
    };
    Ok((entries, next))
}
