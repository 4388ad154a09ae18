//! Dense, zero-filled view of one metric used to evaluate models over a
//! date range, and the snapshot-facing entry points built on it.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use chrono::{Days, Months, NaiveDate};

use super::belief::BeliefState;
use super::engine::{score_day, RegionDay, SurpriseFrame};
use super::model::{ModelKind, ModelSpec};
use super::SurpriseError;
use crate::metric::{Cadence, MetricKind};
use crate::numeric::{compensated_sum, CompensatedSum};
use crate::region::RegionId;
use crate::snapshot::Snapshot;
use crate::time::YearMonth;

/// Regions x time steps for one metric, zero-filled where a region has no
/// value on a step.
#[derive(Debug, Clone)]
pub struct Panel {
    metric: MetricKind,
    regions: Vec<RegionId>,
    populations: Vec<f64>,
    population_total: f64,
    grid: Vec<NaiveDate>,
    /// Row-major `[step][region]` event counts.
    observed: Vec<f64>,
    /// Row-major `[step][region]` monthly visits, when loaded.
    visits: Option<Vec<Option<f64>>>,
    excluded: Vec<RegionId>,
}

/// Expected per-capita rate for each region in scope, `None` where the
/// model abstains.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedRates {
    pub rates: BTreeMap<RegionId, Option<f64>>,
    pub excluded: Vec<RegionId>,
}

fn step_back(cadence: Cadence, date: NaiveDate, steps: usize) -> NaiveDate {
    match cadence {
        Cadence::Daily => date.checked_sub_days(Days::new(steps as u64)).unwrap_or(NaiveDate::MIN),
        Cadence::Monthly => date
            .checked_sub_months(Months::new(steps as u32))
            .unwrap_or(NaiveDate::MIN),
    }
}

fn align(cadence: Cadence, date: NaiveDate, up: bool) -> NaiveDate {
    match cadence {
        Cadence::Daily => date,
        Cadence::Monthly => {
            let first = YearMonth::of(date).first_day();
            if up && first < date {
                YearMonth::of(date).succ().first_day()
            } else {
                first
            }
        }
    }
}

fn grid(cadence: Cadence, from: NaiveDate, to: NaiveDate) -> Vec<NaiveDate> {
    let from = align(cadence, from, true);
    match cadence {
        Cadence::Daily => crate::time::days(from, to).collect(),
        Cadence::Monthly => core::iter::successors(Some(YearMonth::of(from)), |m| Some(m.succ()))
            .map(|m| m.first_day())
            .take_while(|d| *d <= to)
            .collect(),
    }
}

impl Panel {
    /// Build the panel for `metric` over `[from, to]`. Regions in scope are
    /// those at the metric's level that carry data for it and have a known
    /// population; the rest are listed as excluded.
    pub fn build(snapshot: &Snapshot, metric: MetricKind, from: NaiveDate, to: NaiveDate, with_visits: bool) -> Self {
        let basis = metric.surprise_basis();
        let grid = grid(metric.cadence(), from, to);
        let index: BTreeMap<NaiveDate, usize> = grid.iter().enumerate().map(|(i, d)| (*d, i)).collect();

        let mut regions = Vec::new();
        let mut populations = Vec::new();
        let mut bodies = Vec::new();
        let mut excluded = Vec::new();
        for (region, body) in snapshot.metric_bodies(basis) {
            if region.level() != metric.level() {
                continue;
            }
            match snapshot.population(region) {
                Some(p) if p > 0 => {
                    regions.push(region);
                    populations.push(p as f64);
                    bodies.push(body);
                }
                _ => excluded.push(region),
            }
        }
        let n = regions.len();
        let mut observed = vec![0.0; n * grid.len()];
        if let (Some(first), Some(last)) = (grid.first(), grid.last()) {
            for (r, body) in bodies.iter().enumerate() {
                for (date, value) in body.range(*first..=*last) {
                    if let Some(t) = index.get(date) {
                        observed[t * n + r] = *value;
                    }
                }
            }
        }
        let visits = with_visits.then(|| {
            let mut out = vec![None; n * grid.len()];
            for (r, region) in regions.iter().enumerate() {
                if let Some(body) = snapshot.body(*region, MetricKind::VisitsMonthly) {
                    for (t, date) in grid.iter().enumerate() {
                        out[t * n + r] = body.get(&YearMonth::of(*date).first_day()).copied();
                    }
                }
            }
            out
        });
        Self {
            metric,
            population_total: compensated_sum(populations.iter().copied()),
            regions,
            populations,
            grid,
            observed,
            visits,
            excluded,
        }
    }

    pub fn regions(&self) -> &[RegionId] {
        &self.regions
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.grid
    }

    pub fn excluded(&self) -> &[RegionId] {
        &self.excluded
    }

    pub fn step_of(&self, date: NaiveDate) -> Option<usize> {
        self.grid.binary_search(&date).ok()
    }

    fn row(&self, t: usize) -> &[f64] {
        let n = self.regions.len();
        &self.observed[t * n..(t + 1) * n]
    }

    /// Expected rates for every region at step `t`, aligned with
    /// [`Panel::regions`].
    pub fn expected(&self, model: &ModelSpec, t: usize) -> Vec<Option<f64>> {
        let n = self.regions.len();
        if n == 0 {
            return Vec::new();
        }
        let row = self.row(t);
        let total = compensated_sum(row.iter().copied());
        match model.kind {
            ModelKind::Uniform => {
                let share = total / n as f64;
                self.populations.iter().map(|p| Some(share / p)).collect()
            }
            ModelKind::PopulationProportional => {
                vec![Some(total / self.population_total); n]
            }
            ModelKind::FootTrafficProportional => {
                let Some(visits) = &self.visits else {
                    return vec![None; n];
                };
                let visits = &visits[t * n..(t + 1) * n];
                let visit_total = compensated_sum(visits.iter().flatten().copied());
                if visit_total.is_nan() || visit_total <= 0.0 {
                    return vec![None; n];
                }
                visits
                    .iter()
                    .zip(&self.populations)
                    .map(|(v, p)| v.map(|v| total * v / visit_total / p))
                    .collect()
            }
            ModelKind::TrailingBaseRate { window } => {
                let lo = t.saturating_sub(window as usize);
                if lo == t {
                    return vec![None; n];
                }
                (0..n)
                    .map(|r| {
                        let mut acc = CompensatedSum::new();
                        for s in lo..t {
                            acc.add(self.observed[s * n + r]);
                        }
                        Some(acc.value() / (t - lo) as f64 / self.populations[r])
                    })
                    .collect()
            }
        }
    }

    /// Score step `t` against `belief`.
    pub fn frame(&self, t: usize, belief: &BeliefState) -> Result<(SurpriseFrame, BeliefState), SurpriseError> {
        let per_model: Vec<Vec<Option<f64>>> = belief.models().iter().map(|m| self.expected(m, t)).collect();
        let row = self.row(t);
        let days: Vec<RegionDay> = (0..self.regions.len())
            .map(|r| RegionDay {
                region: self.regions[r],
                population: self.populations[r],
                observed: row[r],
                expected: per_model.iter().map(|m| m[r]).collect(),
            })
            .collect();
        let (entries, next) = score_day(belief, &days)?;
        Ok((
            SurpriseFrame {
                date: self.grid[t],
                metric: self.metric,
                models: belief.models().iter().map(|m| m.name.clone()).collect(),
                entries,
                excluded: self.excluded.clone(),
            },
            next,
        ))
    }
}

fn needs_visits(models: &[ModelSpec]) -> bool {
    models.iter().any(|m| m.kind == ModelKind::FootTrafficProportional)
}

fn panel_for_date(snapshot: &Snapshot, metric: MetricKind, date: NaiveDate, models: &[ModelSpec]) -> (Panel, usize) {
    let cadence = metric.cadence();
    let date = align(cadence, date, false);
    let lookback = models.iter().map(ModelSpec::lookback).max().unwrap_or(0);
    let mut start = step_back(cadence, date, lookback);
    if let Some((lo, _)) = snapshot.metric_bounds(metric.surprise_basis()) {
        start = start.max(align(cadence, lo, false)).min(date);
    }
    let panel = Panel::build(snapshot, metric, start, date, needs_visits(models));
    let t = panel.grid.len() - 1;
    (panel, t)
}

/// Per-region expected rate of one model on one date.
pub fn expected_rates(model: &ModelSpec, date: NaiveDate, metric: MetricKind, snapshot: &Snapshot) -> ExpectedRates {
    let (panel, t) = panel_for_date(snapshot, metric, date, core::slice::from_ref(model));
    let rates = panel.regions.iter().copied().zip(panel.expected(model, t)).collect();
    ExpectedRates {
        rates,
        excluded: panel.excluded,
    }
}

/// Score a single date; regions without a value on it count as zero.
pub fn compute_surprise_frame(
    date: NaiveDate,
    metric: MetricKind,
    belief: &BeliefState,
    snapshot: &Snapshot,
) -> Result<(SurpriseFrame, BeliefState), SurpriseError> {
    let (panel, t) = panel_for_date(snapshot, metric, date, belief.models());
    panel.frame(t, belief)
}

/// Frames for every step of `[from, to]` that falls inside the metric's data,
/// starting from equi-plausible beliefs and chaining each posterior into the
/// next date's prior.
pub fn run_surprise_range(
    metric: MetricKind,
    from: NaiveDate,
    to: NaiveDate,
    models: &[ModelSpec],
    snapshot: &Snapshot,
) -> Result<Vec<SurpriseFrame>, SurpriseError> {
    Ok(run_surprise_trace(metric, from, to, models, snapshot)?
        .into_iter()
        .map(|(frame, _)| frame)
        .collect())
}

/// As [`run_surprise_range`], pairing each frame with the belief after it.
pub fn run_surprise_trace(
    metric: MetricKind,
    from: NaiveDate,
    to: NaiveDate,
    models: &[ModelSpec],
    snapshot: &Snapshot,
) -> Result<Vec<(SurpriseFrame, BeliefState)>, SurpriseError> {
    if models.is_empty() {
        return Err(SurpriseError::NoModels);
    }
    if from > to {
        return Err(SurpriseError::Range);
    }
    let Some((lo, hi)) = snapshot.metric_bounds(metric.surprise_basis()) else {
        return Ok(Vec::new());
    };
    let (first, last) = (from.max(lo), to.min(hi));
    if first > last {
        return Ok(Vec::new());
    }
    let cadence = metric.cadence();
    let lookback = models.iter().map(ModelSpec::lookback).max().unwrap_or(0);
    let start = step_back(cadence, align(cadence, first, true), lookback).max(align(cadence, lo, false));
    let panel = Panel::build(snapshot, metric, start, last, needs_visits(models));

    let mut belief = BeliefState::uniform(models.to_vec())?;
    let mut frames = Vec::new();
    for t in 0..panel.grid.len() {
        if panel.grid[t] < first {
            continue;
        }
        let (frame, next) = panel.frame(t, &belief)?;
        frames.push((frame, next.clone()));
        belief = next;
    }
    Ok(frames)
}
