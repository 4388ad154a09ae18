//! Bayesian surprise over a space of candidate models.
//!
//! Each model predicts a per-capita rate for every region. A region's
//! observation turns those predictions into likelihoods; the resulting
//! per-region posterior over models is compared with the current belief by
//! KL divergence (in bits), and the sign of the residual against the
//! belief-weighted consensus rate gives the signed surprise drawn on the map.
//! After each date the global belief is updated once from the geometric mean
//! of the regional likelihoods.

mod belief;
mod engine;
mod likelihood;
mod model;
mod panel;

pub use self::belief::{bayes_update, kl_divergence, BeliefState, WEIGHT_FLOOR};
pub use self::engine::{score_day, RegionDay, SurpriseEntry, SurpriseFrame};
pub use self::likelihood::{likelihood, LIKELIHOOD_FLOOR, RATE_CLAMP};
pub use self::model::{ModelKind, ModelSpec};
pub use self::panel::{
    compute_surprise_frame, expected_rates, run_surprise_range, run_surprise_trace, ExpectedRates, Panel,
};

use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SurpriseError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("distribution is not normalized (sum = {0})")]
    Unnormalized(f64),
    #[error("population must be positive")]
    Population,
    #[error("model list is empty")]
    NoModels,
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("trailing base-rate window must be at least 1 day")]
    Window,
    #[error("date range is inverted")]
    Range,
}
