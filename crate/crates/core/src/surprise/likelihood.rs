use super::SurpriseError;

/// Lower bound for every likelihood.
pub const LIKELIHOOD_FLOOR: f64 = 1e-12;
/// Expected rates are clamped to `[RATE_CLAMP, 1 - RATE_CLAMP]`.
pub const RATE_CLAMP: f64 = 1e-9;

/// Unnormalized likelihood of `observed_count` events in a population given
/// an expected per-capita rate, under the normal approximation to the
/// binomial: `exp(-z^2 / 2)` with `z = (observed/n - p) / sqrt(p(1-p)/n)`.
pub fn likelihood(observed_count: f64, expected_rate: f64, population: f64) -> Result<f64, SurpriseError> {
    if population.is_nan() || population <= 0.0 {
        return Err(SurpriseError::Population);
    }
    Ok(likelihood_unchecked(
        observed_count / population,
        expected_rate,
        population,
    ))
}

pub(crate) fn likelihood_unchecked(observed_rate: f64, expected_rate: f64, population: f64) -> f64 {
    let p = expected_rate.clamp(RATE_CLAMP, 1.0 - RATE_CLAMP);
    let sigma = libm::sqrt(p * (1.0 - p) / population);
    let z = (observed_rate - p) / sigma;
    libm::exp(-0.5 * z * z).max(LIKELIHOOD_FLOOR)
}
