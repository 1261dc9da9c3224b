//! Vote-share forecasting and evaluation.
//!
//! A score vector becomes a forecast by normalizing it to sum to one.
//! Official results are adjusted the same way over the tracked options
//! before comparison. All shares are carried as fractions in [0, 1];
//! percent formatting happens only at the reporting edge.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{PollRecord, WeekWindow};

#[derive(Debug, Error)]
pub enum ForecastError {
    #[error("non-positive scores for {0:?}; enable clamping or inspect the window")]
    NonPositiveScores(Vec<String>),
    #[error("tracked option {0:?} missing from official results")]
    MissingOption(String),
    #[error("tracked options sum to zero in official results")]
    ZeroTrackedTotal,
    #[error("APE undefined: actual share is zero for {0:?}")]
    ZeroActual(String),
    #[error("no (actual, forecast) pairs to average")]
    EmptyPairs,
    #[error("forecast and outcome cover different option sets")]
    OptionMismatch,
}

/// Floor applied to non-positive scores when clamping is enabled.
pub const SCORE_FLOOR: f64 = 0.01;

/// Clamping policy for non-positive scores. Standardized scores can be
/// zero or negative; a share is only meaningful for positive mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClampPolicy {
    /// Raise scores below [`SCORE_FLOOR`] to the floor, with a warning.
    #[default]
    Floor,
    /// Refuse to forecast from non-positive scores.
    Error,
}

/// Per-option forecast shares for one week, summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastShare {
    pub week: WeekWindow,
    pub basis: String,
    pub shares: BTreeMap<String, f64>,
}

/// Official results restricted and renormalized to the tracked options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectionOutcome {
    pub official: BTreeMap<String, f64>,
    pub adjusted: BTreeMap<String, f64>,
}

/// Normalize scores into shares: share_i = score_i / sum(scores).
pub fn forecast_shares(
    scores: &BTreeMap<String, f64>,
    basis: &str,
    week: WeekWindow,
    clamp: ClampPolicy,
) -> Result<ForecastShare, ForecastError> {
    let mut clamped = scores.clone();
    match clamp {
        ClampPolicy::Floor => {
            for (option, score) in clamped.iter_mut() {
                if *score < SCORE_FLOOR {
                    log::warn!(
                        "clamping non-positive {basis} score {score} for {option:?} to {SCORE_FLOOR}"
                    );
                    *score = SCORE_FLOOR;
                }
            }
        }
        ClampPolicy::Error => {
            let offenders: Vec<String> = clamped
                .iter()
                .filter(|(_, s)| **s <= 0.0)
                .map(|(o, _)| o.clone())
                .collect();
            if !offenders.is_empty() {
                return Err(ForecastError::NonPositiveScores(offenders));
            }
        }
    }
    let total: f64 = clamped.values().sum();
    let shares = clamped
        .into_iter()
        .map(|(option, score)| (option, score / total))
        .collect();
    Ok(ForecastShare {
        week,
        basis: basis.to_string(),
        shares,
    })
}

/// Renormalize official shares over the tracked options, redistributing
/// the mass of untracked minor options.
pub fn adjust_actuals(
    official: &BTreeMap<String, f64>,
    tracked: &BTreeSet<String>,
) -> Result<ElectionOutcome, ForecastError> {
    let mut kept = BTreeMap::new();
    for option in tracked {
        let share = official
            .get(option)
            .ok_or_else(|| ForecastError::MissingOption(option.clone()))?;
        kept.insert(option.clone(), *share);
    }
    let total: f64 = kept.values().sum();
    if total <= 0.0 {
        return Err(ForecastError::ZeroTrackedTotal);
    }
    let adjusted = kept.iter().map(|(o, s)| (o.clone(), s / total)).collect();
    Ok(ElectionOutcome {
        official: kept,
        adjusted,
    })
}

/// Absolute percentage error |y - yhat| / y.
pub fn ape(actual: f64, forecast: f64) -> Result<f64, ForecastError> {
    if actual == 0.0 {
        return Err(ForecastError::ZeroActual("option".into()));
    }
    Ok((actual - forecast).abs() / actual)
}

/// Mean absolute percentage error over (actual, forecast) pairs.
pub fn mape(pairs: &[(f64, f64)]) -> Result<f64, ForecastError> {
    if pairs.is_empty() {
        return Err(ForecastError::EmptyPairs);
    }
    let mut sum = 0.0;
    for &(y, yhat) in pairs {
        sum += ape(y, yhat)?;
    }
    Ok(sum / pairs.len() as f64)
}

/// Mean absolute error over (actual, forecast) pairs, in share units.
pub fn mae(pairs: &[(f64, f64)]) -> Result<f64, ForecastError> {
    if pairs.is_empty() {
        return Err(ForecastError::EmptyPairs);
    }
    let sum: f64 = pairs.iter().map(|(y, yhat)| (y - yhat).abs()).sum();
    Ok(sum / pairs.len() as f64)
}

/// Rank options by descending share; ties break lexicographically by
/// option id. Returns rank 1..=n per option.
fn rank(shares: &BTreeMap<String, f64>) -> BTreeMap<String, usize> {
    let mut options: Vec<(&String, f64)> = shares.iter().map(|(o, s)| (o, *s)).collect();
    options.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    options
        .into_iter()
        .enumerate()
        .map(|(i, (option, _))| (option.clone(), i + 1))
        .collect()
}

/// Real and forecast rank vectors plus the count of misranked options.
pub fn rank_compare(
    outcome: &ElectionOutcome,
    forecast: &ForecastShare,
) -> Result<(BTreeMap<String, usize>, BTreeMap<String, usize>, usize), ForecastError> {
    let real_options: BTreeSet<&String> = outcome.adjusted.keys().collect();
    let forecast_options: BTreeSet<&String> = forecast.shares.keys().collect();
    if real_options != forecast_options {
        return Err(ForecastError::OptionMismatch);
    }
    let real_ranks = rank(&outcome.adjusted);
    let forecast_ranks = rank(&forecast.shares);
    let misranked = real_ranks
        .iter()
        .filter(|(option, r)| forecast_ranks[*option] != **r)
        .count();
    Ok((real_ranks, forecast_ranks, misranked))
}

/// Average the polls published in one week and renormalize over the
/// tracked options. Returns `None` when the week has no polls.
pub fn poll_average(
    polls_in_week: &[PollRecord],
    tracked: &BTreeSet<String>,
    week: WeekWindow,
) -> Result<Option<ForecastShare>, ForecastError> {
    if polls_in_week.is_empty() {
        return Ok(None);
    }
    let mut means = BTreeMap::new();
    for option in tracked {
        let mut sum = 0.0;
        let mut count = 0usize;
        for poll in polls_in_week {
            if let Some(share) = poll.shares.get(option) {
                sum += share;
                count += 1;
            }
        }
        if count == 0 {
            return Err(ForecastError::MissingOption(option.clone()));
        }
        means.insert(option.clone(), sum / count as f64);
    }
    // Renormalization over tracked options mirrors adjust_actuals.
    forecast_shares(&means, "poll_average", week, ClampPolicy::Error).map(Some)
}

/// Per-option evaluation row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalRow {
    pub option: String,
    /// Official share as reported, over all options.
    pub actual: f64,
    /// Official share renormalized over the tracked options.
    pub adjusted_actual: f64,
    pub forecast: f64,
    /// |adjusted - forecast| in percentage points.
    pub abs_error_pp: f64,
    pub ape: f64,
    pub real_rank: usize,
    pub forecast_rank: usize,
}

/// Forecast-vs-outcome report: one row per option plus MAPE/MAE aggregates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub basis: String,
    pub week: WeekWindow,
    pub rows: Vec<EvalRow>,
    pub mape: f64,
    /// Mean absolute error in percentage points.
    pub mae_pp: f64,
    pub n_misranked: usize,
}

/// Evaluate a forecast against the adjusted outcome.
pub fn evaluate(
    outcome: &ElectionOutcome,
    forecast: &ForecastShare,
) -> Result<EvalReport, ForecastError> {
    let (real_ranks, forecast_ranks, n_misranked) = rank_compare(outcome, forecast)?;
    let mut rows = Vec::new();
    let mut pairs = Vec::new();
    for (option, adjusted) in &outcome.adjusted {
        let predicted = forecast.shares[option];
        pairs.push((*adjusted, predicted));
        rows.push(EvalRow {
            option: option.clone(),
            actual: outcome.official[option],
            adjusted_actual: *adjusted,
            forecast: predicted,
            abs_error_pp: (adjusted - predicted).abs() * 100.0,
            ape: ape(*adjusted, predicted)?,
            real_rank: real_ranks[option],
            forecast_rank: forecast_ranks[option],
        });
    }
    Ok(EvalReport {
        basis: forecast.basis.clone(),
        week: forecast.week,
        rows,
        mape: mape(&pairs)?,
        mae_pp: mae(&pairs)? * 100.0,
        n_misranked,
    })
}
