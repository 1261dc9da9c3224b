//! Forecast bases: interchangeable strategies that turn a scored week
//! into the per-option score vector fed to [`crate::forecast::forecast_shares`].
//!
//! Each basis lives behind the [`ForecastBasis`] trait and is registered
//! by name in a [`BasisRegistry`], so the CLI can select one with
//! `--basis NAME` or run every applicable basis by default. The four
//! score bases read the weekly table (composite or one standardized
//! dimension); the poll basis averages the week's polls instead.

use std::collections::{BTreeMap, BTreeSet};

use chrono::Datelike;

use crate::forecast::{forecast_shares, poll_average, ClampPolicy, ForecastError, ForecastShare};
use crate::ingest::{PollRecord, WeekWindow};
use crate::sbs::SbsTable;

/// Everything a basis may draw on for one forecast.
pub struct BasisContext<'a> {
    pub table: &'a SbsTable,
    pub tracked: &'a BTreeSet<String>,
    pub polls: &'a [PollRecord],
    pub clamp: ClampPolicy,
}

/// One score-to-forecast strategy.
pub trait ForecastBasis: Send + Sync {
    /// Registry name, also written into reports.
    fn name(&self) -> &'static str;

    /// Forecast for the given week, or `None` when this basis has nothing
    /// to say there (no scores, or no polls).
    fn forecast(
        &self,
        ctx: &BasisContext<'_>,
        week: &WeekWindow,
    ) -> Result<Option<ForecastShare>, ForecastError>;
}

/// Forecast from a per-brand score extractor over the weekly table.
fn forecast_from_table(
    ctx: &BasisContext<'_>,
    week: &WeekWindow,
    name: &'static str,
    extract: impl Fn(&crate::sbs::SbsScore) -> f64,
) -> Result<Option<ForecastShare>, ForecastError> {
    let Some(scores) = ctx.table.scored(week) else {
        return Ok(None);
    };
    let vector: BTreeMap<String, f64> = ctx
        .tracked
        .iter()
        .filter_map(|brand| scores.get(brand).map(|s| (brand.clone(), extract(s))))
        .collect();
    if vector.len() != ctx.tracked.len() {
        // A brand missing from a scored week means the table was built for
        // a different brand set; treat as absent rather than guessing.
        return Ok(None);
    }
    forecast_shares(&vector, name, *week, ctx.clamp).map(Some)
}

/// Composite score basis.
pub struct SbsBasis;

impl ForecastBasis for SbsBasis {
    fn name(&self) -> &'static str {
        "sbs"
    }

    fn forecast(
        &self,
        ctx: &BasisContext<'_>,
        week: &WeekWindow,
    ) -> Result<Option<ForecastShare>, ForecastError> {
        forecast_from_table(ctx, week, self.name(), |s| s.sbs)
    }
}

/// Standardized prevalence alone.
pub struct PrevalenceBasis;

impl ForecastBasis for PrevalenceBasis {
    fn name(&self) -> &'static str {
        "prevalence"
    }

    fn forecast(
        &self,
        ctx: &BasisContext<'_>,
        week: &WeekWindow,
    ) -> Result<Option<ForecastShare>, ForecastError> {
        forecast_from_table(ctx, week, self.name(), |s| s.z_prevalence)
    }
}

/// Standardized diversity alone.
pub struct DiversityBasis;

impl ForecastBasis for DiversityBasis {
    fn name(&self) -> &'static str {
        "diversity"
    }

    fn forecast(
        &self,
        ctx: &BasisContext<'_>,
        week: &WeekWindow,
    ) -> Result<Option<ForecastShare>, ForecastError> {
        forecast_from_table(ctx, week, self.name(), |s| s.z_diversity)
    }
}

/// Standardized connectivity alone.
pub struct ConnectivityBasis;

impl ForecastBasis for ConnectivityBasis {
    fn name(&self) -> &'static str {
        "connectivity"
    }

    fn forecast(
        &self,
        ctx: &BasisContext<'_>,
        week: &WeekWindow,
    ) -> Result<Option<ForecastShare>, ForecastError> {
        forecast_from_table(ctx, week, self.name(), |s| s.z_connectivity)
    }
}

/// Mean of the week's vote-intention polls, renormalized over the tracked
/// options.
pub struct PollAverageBasis;

impl ForecastBasis for PollAverageBasis {
    fn name(&self) -> &'static str {
        "poll_average"
    }

    fn forecast(
        &self,
        ctx: &BasisContext<'_>,
        week: &WeekWindow,
    ) -> Result<Option<ForecastShare>, ForecastError> {
        let in_week: Vec<PollRecord> = ctx
            .polls
            .iter()
            .filter(|p| {
                let w = p.date.iso_week();
                (w.year(), w.week()) == (week.iso_year, week.iso_week)
            })
            .cloned()
            .collect();
        poll_average(&in_week, ctx.tracked, *week)
    }
}

/// Name-indexed basis registry.
pub struct BasisRegistry {
    bases: Vec<Box<dyn ForecastBasis>>,
}

impl BasisRegistry {
    pub fn new() -> Self {
        BasisRegistry { bases: Vec::new() }
    }

    /// All built-in bases, in report order.
    pub fn with_defaults() -> Self {
        let mut registry = Self::new();
        registry.register(Box::new(SbsBasis));
        registry.register(Box::new(PrevalenceBasis));
        registry.register(Box::new(DiversityBasis));
        registry.register(Box::new(ConnectivityBasis));
        registry.register(Box::new(PollAverageBasis));
        registry
    }

    pub fn register(&mut self, basis: Box<dyn ForecastBasis>) {
        debug_assert!(
            self.get(basis.name()).is_none(),
            "duplicate basis {:?}",
            basis.name()
        );
        self.bases.push(basis);
    }

    pub fn get(&self, name: &str) -> Option<&dyn ForecastBasis> {
        self.bases
            .iter()
            .find(|b| b.name() == name)
            .map(Box::as_ref)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.bases.iter().map(|b| b.name()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn ForecastBasis> {
        self.bases.iter().map(Box::as_ref)
    }
}

impl Default for BasisRegistry {
    fn default() -> Self {
        Self::with_defaults()
    }
}
