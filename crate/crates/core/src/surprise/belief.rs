use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::model::ModelSpec;
use super::SurpriseError;
use crate::numeric::compensated_sum;

/// Lower bound for every belief weight.
pub const WEIGHT_FLOOR: f64 = 1e-12;
const NORMALIZED_TOLERANCE: f64 = 1e-6;

/// Plausibility of each model, aligned with `models`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefState {
    models: Vec<ModelSpec>,
    weights: Vec<f64>,
}

impl BeliefState {
    /// Equi-plausible start: every model gets `1 / |models|`.
    pub fn uniform(models: Vec<ModelSpec>) -> Result<Self, SurpriseError> {
        if models.is_empty() {
            return Err(SurpriseError::NoModels);
        }
        let w = 1.0 / models.len() as f64;
        let weights = vec![w; models.len()];
        Ok(Self { models, weights })
    }

    pub fn models(&self) -> &[ModelSpec] {
        &self.models
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn weight_of(&self, name: &str) -> Option<f64> {
        self.models.iter().position(|m| m.name == name).map(|i| self.weights[i])
    }
}

/// `posterior_i ∝ prior_i · L_i`, then floored at [`WEIGHT_FLOOR`] and
/// renormalized.
pub fn bayes_update(prior: &BeliefState, likelihoods: &[f64]) -> Result<BeliefState, SurpriseError> {
    if prior.weights.len() != likelihoods.len() {
        return Err(SurpriseError::LengthMismatch {
            left: prior.weights.len(),
            right: likelihoods.len(),
        });
    }
    let mut weights = Vec::with_capacity(likelihoods.len());
    update_weights(&prior.weights, likelihoods, &mut weights);
    Ok(BeliefState {
        models: prior.models.clone(),
        weights,
    })
}

pub(crate) fn update_weights(prior: &[f64], likelihoods: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.extend(
        prior
            .iter()
            .zip(likelihoods)
            .map(|(p, l)| p * l.max(super::LIKELIHOOD_FLOOR)),
    );
    normalize_with_floor(out);
}

/// Normalize to 1 while keeping every entry at or above the floor: floored
/// entries are pinned and the remaining mass is rescaled until no free entry
/// drops below the floor.
pub(crate) fn normalize_with_floor(w: &mut [f64]) {
    let total = compensated_sum(w.iter().copied());
    if total.is_nan() || total <= 0.0 || !total.is_finite() {
        let u = 1.0 / w.len() as f64;
        w.iter_mut().for_each(|x| *x = u);
        return;
    }
    w.iter_mut().for_each(|x| *x /= total);
    for _ in 0..=w.len() {
        let pinned = w.iter().filter(|x| **x <= WEIGHT_FLOOR).count();
        if pinned == 0 {
            return;
        }
        let free = compensated_sum(w.iter().copied().filter(|x| *x > WEIGHT_FLOOR));
        let scale = (1.0 - pinned as f64 * WEIGHT_FLOOR) / free;
        let mut settled = true;
        for x in w.iter_mut() {
            if *x <= WEIGHT_FLOOR {
                *x = WEIGHT_FLOOR;
            } else {
                *x *= scale;
                if *x < WEIGHT_FLOOR {
                    settled = false;
                }
            }
        }
        if settled {
            return;
        }
    }
}

/// `Σ p_i log2(p_i / q_i)` in bits.
pub fn kl_divergence(posterior: &[f64], prior: &[f64]) -> Result<f64, SurpriseError> {
    if posterior.len() != prior.len() {
        return Err(SurpriseError::LengthMismatch {
            left: posterior.len(),
            right: prior.len(),
        });
    }
    for dist in [posterior, prior] {
        let s = compensated_sum(dist.iter().copied());
        if (s - 1.0).abs() > NORMALIZED_TOLERANCE {
            return Err(SurpriseError::Unnormalized(s));
        }
    }
    Ok(kl_bits(posterior, prior))
}

pub(crate) fn kl_bits(posterior: &[f64], prior: &[f64]) -> f64 {
    let terms = posterior
        .iter()
        .zip(prior)
        .map(|(p, q)| if *p <= 0.0 { 0.0 } else { p * libm::log2(p / q) });
    compensated_sum(terms).max(0.0)
}
