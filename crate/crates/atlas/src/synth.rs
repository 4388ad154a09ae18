//! Seeded stand-in for the proprietary foot-traffic corpus.

use atlas_core::{PatternsRecord, Region, YearMonth};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

/// Monthly visits per resident before noise.
const VISITS_PER_CAPITA: f64 = 3.0;
const NOISE_SIGMA: f64 = 0.3;
/// NAICS sectors and their share of visits: retail, arts/recreation,
/// accommodation/food.
const SECTORS: [(u8, f64); 3] = [(44, 0.35), (71, 0.25), (72, 0.40)];
const RESIDENTS_PER_POI: f64 = 250.0;

/// One record per (region, month, sector). Visits are proportional to
/// population with mean-one log-normal noise per region-month; regions
/// without a population are skipped. Pure in `(regions, months, seed)`.
pub fn synth_patterns(regions: &[Region], start: YearMonth, months: usize, seed: u64) -> Vec<PatternsRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = LogNormal::new(-NOISE_SIGMA * NOISE_SIGMA / 2.0, NOISE_SIGMA).expect("valid sigma");
    let mut out = Vec::with_capacity(regions.len() * months * SECTORS.len());
    for region in regions {
        let Some(population) = region.population.filter(|p| *p > 0) else {
            continue;
        };
        let pop = population as f64;
        for month in start.range(months) {
            let total = pop * VISITS_PER_CAPITA * noise.sample(&mut rng);
            for (naics, share) in SECTORS {
                out.push(PatternsRecord {
                    fips: region.id,
                    month,
                    visits: (total * share).round() as u64,
                    poi_count: ((pop * share / RESIDENTS_PER_POI).round() as u64).max(1),
                    naics_prefix: naics,
                });
            }
        }
    }
    out
}
