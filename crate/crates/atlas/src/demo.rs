//! Deterministic desk-scale fixture set: 50 counties in 10 states over 400
//! days, in the same CSV formats the real sources use.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use atlas_core::{NaiveDate, Region, RegionId, YearMonth};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;
use serde_json::json;

use crate::report::Source;

pub const DEFAULT_SEED: u64 = 20200301;
pub const DAYS: usize = 400;
pub const COUNTIES_PER_STATE: u32 = 5;
const STATES: [u8; 10] = [6, 53, 41, 39, 17, 27, 48, 13, 36, 25];
const VAX_START: (i32, u32, u32) = (2020, 12, 14);
const CORRECTION_PROB: f64 = 0.004;
const CASE_FATALITY: f64 = 0.015;

pub const NYT_FILE: &str = "nyt.csv";
pub const CDC_FILE: &str = "cdc.csv";
pub const CENSUS_FILE: &str = "census.csv";
pub const CROSSWALK_FILE: &str = "crosswalk.csv";
pub const PATTERNS_FILE: &str = "patterns.csv";
pub const BOUNDARIES_FILE: &str = "boundaries.geojson";
pub const CONFIG_FILE: &str = "config.json";
/// Store directory named by the generated config, relative to the output dir.
pub const DATA_DIR: &str = "data";

/// Source files in ingest order.
pub const SOURCES: [(Source, &str); 5] = [
    (Source::Census, CENSUS_FILE),
    (Source::Nyt, NYT_FILE),
    (Source::Cdc, CDC_FILE),
    (Source::Crosswalk, CROSSWALK_FILE),
    (Source::Patterns, PATTERNS_FILE),
];

pub fn start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2020, 3, 1).expect("valid date")
}

pub fn end_date() -> NaiveDate {
    start_date() + chrono::Days::new(DAYS as u64 - 1)
}

#[derive(Debug, Clone, Serialize)]
pub struct DemoSummary {
    pub out: PathBuf,
    pub seed: u64,
    pub counties: usize,
    pub states: usize,
    pub days: usize,
    pub from: NaiveDate,
    pub to: NaiveDate,
    pub files: Vec<String>,
}

struct County {
    region: Region,
    state_name: &'static str,
    /// Multiplier on the national incidence curve.
    intensity: f64,
}

fn counties(rng: &mut ChaCha8Rng) -> Vec<County> {
    let mut out = Vec::new();
    for state in STATES {
        let info = atlas_core::region::state_by_fips(state).expect("known state");
        for k in 0..COUNTIES_PER_STATE {
            let code = u32::from(state) * 1000 + 2 * k + 1;
            // Log-uniform between 5e3 and 2e6.
            let population = (5e3 * 400f64.powf(rng.random::<f64>())).round() as u64;
            out.push(County {
                region: Region {
                    id: RegionId::county(code).expect("valid county"),
                    name: format!("{} County {}", info.name, k + 1),
                    population: Some(population),
                },
                state_name: info.name,
                intensity: 0.5 + rng.random::<f64>(),
            });
        }
    }
    out
}

/// Daily new cases per resident: a spring wave, a winter wave, a floor.
fn incidence(day: usize) -> f64 {
    let wave = |center: f64, width: f64, height: f64| {
        let x = (day as f64 - center) / width;
        height * (-x * x / 2.0).exp()
    };
    2e-5 + wave(45.0, 18.0, 1.5e-4) + wave(300.0, 30.0, 6e-4)
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as u64
}

fn csv_writer(path: &Path) -> io::Result<csv::Writer<fs::File>> {
    Ok(csv::Writer::from_writer(fs::File::create(path)?))
}

fn csv_io(e: csv::Error) -> io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e,
        other => io::Error::other(format!("{other:?}")),
    }
}

fn write_nyt(path: &Path, counties: &[County], rng: &mut ChaCha8Rng) -> Result<(), csv::Error> {
    let mut w = csv_writer(path)?;
    w.write_record(["date", "county", "state", "fips", "cases", "deaths"])?;
    let mut cum: Vec<(u64, u64)> = vec![(0, 0); counties.len()];
    let mut unknown: Vec<(u64, u64)> = vec![(0, 0); STATES.len()];
    for day in 0..DAYS {
        let date = (start_date() + chrono::Days::new(day as u64)).to_string();
        for (c, (cases, deaths)) in counties.iter().zip(cum.iter_mut()) {
            let pop = c.region.population.expect("demo population") as f64;
            let new = poisson(rng, incidence(day) * c.intensity * pop);
            *cases += new;
            *deaths += poisson(rng, new as f64 * CASE_FATALITY);
            if *cases > 10 && rng.random_bool(CORRECTION_PROB) {
                // Reporting correction: the cumulative count goes back down.
                *cases -= rng.random_range(1..=(*cases / 10).max(1));
            }
            w.write_record([
                date.as_str(),
                &c.region.name,
                c.state_name,
                &c.region.id.to_string(),
                &cases.to_string(),
                &deaths.to_string(),
            ])?;
        }
        for (s, (cases, deaths)) in STATES.iter().zip(unknown.iter_mut()) {
            *cases += poisson(rng, 0.5);
            *deaths += poisson(rng, 0.01);
            let name = atlas_core::region::state_by_fips(*s).expect("known state").name;
            w.write_record([
                date.as_str(),
                "Unknown",
                name,
                "",
                &cases.to_string(),
                &deaths.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_cdc(path: &Path, counties: &[County], rng: &mut ChaCha8Rng) -> Result<(), csv::Error> {
    let mut w = csv_writer(path)?;
    w.write_record(["date", "state", "doses_administered", "people_fully_vaccinated"])?;
    let (y, m, d) = VAX_START;
    let start = NaiveDate::from_ymd_opt(y, m, d).expect("valid date");
    let pops: Vec<f64> = STATES
        .iter()
        .map(|s| {
            counties
                .iter()
                .filter(|c| c.region.id.state_code() == *s)
                .map(|c| c.region.population.expect("demo population") as f64)
                .sum()
        })
        .collect();
    let mut cum = vec![(0u64, 0u64); STATES.len()];
    let mut date = start;
    while date <= end_date() {
        let t = (date - start).num_days() as f64;
        for ((s, pop), (doses, full)) in STATES.iter().zip(&pops).zip(cum.iter_mut()) {
            // Ramp up to about 1% of residents per day.
            let rate = 0.01 * (t / 60.0).min(1.0);
            let new = poisson(rng, rate * pop);
            *doses += new;
            *full += poisson(rng, 0.4 * new as f64);
            *full = (*full).min(*doses / 2);
            let postal = atlas_core::region::state_by_fips(*s).expect("known state").postal;
            w.write_record([&date.to_string(), postal, &doses.to_string(), &full.to_string()])?;
        }
        date = date.succ_opt().expect("in range");
    }
    w.flush()?;
    Ok(())
}

fn write_census(path: &Path, counties: &[County]) -> Result<(), csv::Error> {
    let mut w = csv_writer(path)?;
    w.write_record(["fips", "population"])?;
    for c in counties {
        w.write_record([
            c.region.id.to_string(),
            c.region.population.expect("demo population").to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_crosswalk(path: &Path, counties: &[County]) -> Result<(), csv::Error> {
    let mut w = csv_writer(path)?;
    w.write_record(["zip", "fips", "weight"])?;
    for (i, c) in counties.iter().enumerate() {
        let base = 10_000 + i * 10;
        w.write_record([format!("{base:05}"), c.region.id.to_string(), "1".into()])?;
        // Every other county shares its second ZIP with the next county in
        // the same state.
        let next = counties
            .get(i + 1)
            .filter(|n| n.region.id.state_code() == c.region.id.state_code());
        match next {
            Some(n) if i % 2 == 0 => {
                w.write_record([format!("{:05}", base + 1), c.region.id.to_string(), "0.6".into()])?;
                w.write_record([format!("{:05}", base + 1), n.region.id.to_string(), "0.4".into()])?;
            }
            _ => w.write_record([format!("{:05}", base + 1), c.region.id.to_string(), "1".into()])?,
        }
    }
    w.flush()?;
    Ok(())
}

fn write_patterns(path: &Path, counties: &[County], seed: u64) -> Result<(), csv::Error> {
    let regions: Vec<Region> = counties.iter().map(|c| c.region.clone()).collect();
    let first = YearMonth::of(start_date());
    let months = YearMonth::of(end_date()).months_since(first) as usize + 1;
    let mut w = csv_writer(path)?;
    w.write_record(["fips", "month", "visits", "poi_count", "naics_prefix"])?;
    for p in crate::synth::synth_patterns(&regions, first, months, seed) {
        w.write_record([
            p.fips.to_string(),
            p.month.to_string(),
            p.visits.to_string(),
            p.poi_count.to_string(),
            p.naics_prefix.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One unit square per county: states are rows, counties columns.
fn boundaries(counties: &[County]) -> serde_json::Value {
    let features: Vec<_> = counties
        .iter()
        .map(|c| {
            let row = STATES
                .iter()
                .position(|s| *s == c.region.id.state_code())
                .expect("demo state") as f64;
            let col = counties
                .iter()
                .filter(|o| o.region.id.state_code() == c.region.id.state_code())
                .position(|o| o.region.id == c.region.id)
                .expect("self") as f64;
            let (x, y) = (-120.0 + col, 45.0 - row);
            json!({
                "type": "Feature",
                "properties": { "fips": c.region.id },
                "geometry": {
                    "type": "Polygon",
                    "coordinates": [[[x, y], [x + 1.0, y], [x + 1.0, y - 1.0], [x, y - 1.0], [x, y]]],
                },
            })
        })
        .collect();
    json!({ "type": "FeatureCollection", "features": features })
}

/// Write the fixture set into `out`. Output depends only on `seed`.
pub fn write_demo(out: &Path, seed: u64) -> io::Result<DemoSummary> {
    fs::create_dir_all(out)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counties = counties(&mut rng);
    write_census(&out.join(CENSUS_FILE), &counties).map_err(csv_io)?;
    write_nyt(&out.join(NYT_FILE), &counties, &mut rng).map_err(csv_io)?;
    write_cdc(&out.join(CDC_FILE), &counties, &mut rng).map_err(csv_io)?;
    write_crosswalk(&out.join(CROSSWALK_FILE), &counties).map_err(csv_io)?;
    write_patterns(&out.join(PATTERNS_FILE), &counties, seed.wrapping_add(1)).map_err(csv_io)?;
    fs::write(
        out.join(BOUNDARIES_FILE),
        crate::canonical::to_string(&boundaries(&counties)),
    )?;
    let config = json!({
        "port": 8080,
        "data_dir": DATA_DIR,
        "boundaries": BOUNDARIES_FILE,
    });
    fs::write(out.join(CONFIG_FILE), serde_json::to_string_pretty(&config)? + "\n")?;
    let files = [
        CENSUS_FILE,
        NYT_FILE,
        CDC_FILE,
        CROSSWALK_FILE,
        PATTERNS_FILE,
        BOUNDARIES_FILE,
        CONFIG_FILE,
    ];
    Ok(DemoSummary {
        out: out.to_path_buf(),
        seed,
        counties: counties.len(),
        states: STATES.len(),
        days: DAYS,
        from: start_date(),
        to: end_date(),
        files: files.iter().map(|f| f.to_string()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_files_are_clean_and_deterministic() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        write_demo(a.path(), 7).unwrap();
        write_demo(b.path(), 7).unwrap();
        for f in [
            NYT_FILE,
            CDC_FILE,
            CENSUS_FILE,
            CROSSWALK_FILE,
            PATTERNS_FILE,
            BOUNDARIES_FILE,
        ] {
            assert_eq!(
                fs::read(a.path().join(f)).unwrap(),
                fs::read(b.path().join(f)).unwrap(),
                "{f}"
            );
        }
        let nyt = crate::ingest::parse_nyt(fs::File::open(a.path().join(NYT_FILE)).unwrap()).unwrap();
        assert_eq!(nyt.report.rejected_total(), 0);
        assert_eq!(nyt.report.rows, (DAYS * (50 + STATES.len())) as u64);
        let xw = crate::ingest::parse_crosswalk(fs::File::open(a.path().join(CROSSWALK_FILE)).unwrap()).unwrap();
        assert_eq!(xw.report.rejected_total(), 0);
        crate::boundaries::Boundaries::load(&a.path().join(BOUNDARIES_FILE)).unwrap();
    }

    #[test]
    fn end_date_spans_four_hundred_days() {
        assert_eq!((end_date() - start_date()).num_days() + 1, DAYS as i64);
    }
}
