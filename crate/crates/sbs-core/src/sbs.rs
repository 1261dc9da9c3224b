//! Standardization and the composite semantic brand score.
//!
//! Each window defines a relevant word set: every node of its pruned
//! network plus every tracked brand token (brands stay in the population
//! even when pruned out or absent, with zero raw values). Prevalence,
//! diversity and connectivity are z-scored over that set with the
//! population standard deviation, and the composite score is their sum.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::centrality::{prevalence_map, weighted_betweenness, RawScores};
use crate::graph::{build_cooccurrence, prune, GraphConfig, WordNetwork};
use crate::ingest::WeekWindow;
use crate::textprep::TokenDoc;

#[derive(Debug, Error)]
pub enum SbsError {
    #[error("degenerate window {week}: zero variance in {dimension} over {n} relevant words")]
    DegenerateWindow {
        week: String,
        dimension: &'static str,
        n: usize,
    },
    #[error("window {week}: relevant set has {n} words, need at least 2")]
    RelevantSetTooSmall { week: String, n: usize },
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {message}")]
    Parse { path: String, message: String },
}

/// Per-brand scores for one window: raw values, z-scores and composite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbsScore {
    pub brand: String,
    pub week: WeekWindow,
    pub raw: RawScores,
    pub z_prevalence: f64,
    pub z_diversity: f64,
    pub z_connectivity: f64,
    pub sbs: f64,
}

/// Z-score `values` over the `relevant` population.
///
/// Uses the population (divide-by-N) standard deviation. A zero-variance
/// dimension is a degenerate window and errors out, naming the dimension.
pub fn standardize(
    values: &BTreeMap<String, f64>,
    relevant: &BTreeSet<String>,
    dimension: &'static str,
    week: &WeekWindow,
) -> Result<BTreeMap<String, f64>, SbsError> {
    let n = relevant.len();
    if n < 2 {
        return Err(SbsError::RelevantSetTooSmall {
            week: week.label(),
            n,
        });
    }
    let value_of = |term: &String| values.get(term).copied().unwrap_or(0.0);
    let mean = relevant.iter().map(value_of).sum::<f64>() / n as f64;
    let variance = relevant
        .iter()
        .map(|t| {
            let d = value_of(t) - mean;
            d * d
        })
        .sum::<f64>()
        / n as f64;
    let std = variance.sqrt();
    if std == 0.0 {
        return Err(SbsError::DegenerateWindow {
            week: week.label(),
            dimension,
            n,
        });
    }
    Ok(relevant
        .iter()
        .map(|t| (t.clone(), (value_of(t) - mean) / std))
        .collect())
}

/// Everything computed for one window: the relevant set, raw and
/// standardized values for every relevant term, and per-brand extracts.
#[derive(Debug, Clone)]
pub struct WindowScores {
    pub week: WeekWindow,
    pub relevant: BTreeSet<String>,
    pub raw_prevalence: BTreeMap<String, f64>,
    pub raw_diversity: BTreeMap<String, f64>,
    pub raw_connectivity: BTreeMap<String, f64>,
    pub z_prevalence: BTreeMap<String, f64>,
    pub z_diversity: BTreeMap<String, f64>,
    pub z_connectivity: BTreeMap<String, f64>,
    pub brands: BTreeMap<String, SbsScore>,
}

/// Score one window: raw dimensions for every relevant term, z-scores over
/// the relevant set, composites for the tracked brands.
///
/// The network must be the pruned co-occurrence network of exactly these
/// docs. Brands with zero prevalence are scored anyway (their absence is
/// itself signal); a warning is logged.
pub fn compute_window_scores(
    docs: &[TokenDoc],
    network: &WordNetwork,
    brands: &[String],
    week: WeekWindow,
) -> Result<WindowScores, SbsError> {
    let mut relevant: BTreeSet<String> = network.nodes().map(str::to_string).collect();
    for brand in brands {
        relevant.insert(brand.clone());
    }

    let counts = prevalence_map(docs);
    let raw_prevalence: BTreeMap<String, f64> = relevant
        .iter()
        .map(|t| (t.clone(), counts.get(t).copied().unwrap_or(0) as f64))
        .collect();
    let degrees = network.degree_map();
    let raw_diversity: BTreeMap<String, f64> = relevant
        .iter()
        .map(|t| {
            (
                t.clone(),
                degrees.get(t.as_str()).copied().unwrap_or(0) as f64,
            )
        })
        .collect();
    let betweenness = weighted_betweenness(network);
    let raw_connectivity: BTreeMap<String, f64> = relevant
        .iter()
        .map(|t| (t.clone(), betweenness.get(t).copied().unwrap_or(0.0)))
        .collect();

    let z_prevalence = standardize(&raw_prevalence, &relevant, "prevalence", &week)?;
    let z_diversity = standardize(&raw_diversity, &relevant, "diversity", &week)?;
    let z_connectivity = standardize(&raw_connectivity, &relevant, "connectivity", &week)?;

    let mut brand_scores = BTreeMap::new();
    for brand in brands {
        let raw = RawScores {
            prevalence: raw_prevalence[brand] as u64,
            diversity: raw_diversity[brand] as usize,
            connectivity: raw_connectivity[brand],
        };
        if raw.prevalence == 0 {
            log::warn!("brand {brand:?} has zero prevalence in {}", week.label());
        }
        let zp = z_prevalence[brand];
        let zd = z_diversity[brand];
        let zc = z_connectivity[brand];
        brand_scores.insert(
            brand.clone(),
            SbsScore {
                brand: brand.clone(),
                week,
                raw,
                z_prevalence: zp,
                z_diversity: zd,
                z_connectivity: zc,
                sbs: zp + zd + zc,
            },
        );
    }

    Ok(WindowScores {
        week,
        relevant,
        raw_prevalence,
        raw_diversity,
        raw_connectivity,
        z_prevalence,
        z_diversity,
        z_connectivity,
        brands: brand_scores,
    })
}

/// Per-brand composites for one window (the common case of
/// [`compute_window_scores`]).
pub fn compute_sbs(
    docs: &[TokenDoc],
    network: &WordNetwork,
    brands: &[String],
    week: WeekWindow,
) -> Result<BTreeMap<String, SbsScore>, SbsError> {
    Ok(compute_window_scores(docs, network, brands, week)?.brands)
}

/// One row of the weekly table: scored, or absent when the week's corpus
/// is empty.
#[derive(Debug, Clone)]
pub enum WeekEntry {
    Absent,
    Scored(BTreeMap<String, SbsScore>),
}

/// Week-by-brand score table over an analysis period.
#[derive(Debug, Clone, Default)]
pub struct SbsTable {
    pub rows: BTreeMap<WeekWindow, WeekEntry>,
}

impl SbsTable {
    pub fn scored(&self, week: &WeekWindow) -> Option<&BTreeMap<String, SbsScore>> {
        match self.rows.get(week)? {
            WeekEntry::Scored(scores) => Some(scores),
            WeekEntry::Absent => None,
        }
    }

    /// The scored week at the given lag, if any.
    pub fn at_lag(&self, lag: i64) -> Option<(&WeekWindow, &BTreeMap<String, SbsScore>)> {
        self.rows.iter().find_map(|(week, entry)| match entry {
            WeekEntry::Scored(scores) if week.lag == lag => Some((week, scores)),
            _ => None,
        })
    }

    pub fn scored_weeks(&self) -> impl Iterator<Item = &WeekWindow> {
        self.rows.iter().filter_map(|(week, entry)| match entry {
            WeekEntry::Scored(_) => Some(week),
            WeekEntry::Absent => None,
        })
    }
}

/// Score every window of the analysis period. `weeks` lists all windows
/// (typically [`crate::ingest::analysis_weeks`]); windows without docs are
/// marked absent rather than scored as zero. Windows run in parallel.
pub fn sbs_timeseries(
    weekly_docs: &BTreeMap<WeekWindow, Vec<TokenDoc>>,
    weeks: &[WeekWindow],
    brands: &[String],
    graph_config: &GraphConfig,
) -> Result<SbsTable, SbsError> {
    let entries: Vec<(WeekWindow, Result<WeekEntry, SbsError>)> = weeks
        .par_iter()
        .map(|week| {
            let entry = match weekly_docs.get(week) {
                None => Ok(WeekEntry::Absent),
                Some(docs) if docs.is_empty() => Ok(WeekEntry::Absent),
                Some(docs) => {
                    let network = prune(
                        &build_cooccurrence(docs, graph_config.window),
                        graph_config.prune_min,
                    );
                    compute_sbs(docs, &network, brands, *week).map(WeekEntry::Scored)
                }
            };
            (*week, entry)
        })
        .collect();
    let mut rows = BTreeMap::new();
    for (week, entry) in entries {
        rows.insert(week, entry?);
    }
    Ok(SbsTable { rows })
}

/// Write the table as CSV, one row per (scored week, brand).
pub fn write_timeseries_csv(table: &SbsTable, path: &Path) -> Result<(), SbsError> {
    let csv_err = |e: csv::Error| SbsError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let mut writer = csv::Writer::from_path(path).map_err(csv_err)?;
    writer
        .write_record([
            "week_iso",
            "brand",
            "prevalence",
            "diversity",
            "connectivity",
            "z_prevalence",
            "z_diversity",
            "z_connectivity",
            "sbs",
        ])
        .map_err(csv_err)?;
    for (week, entry) in &table.rows {
        let WeekEntry::Scored(scores) = entry else {
            continue;
        };
        for (brand, score) in scores {
            writer
                .write_record([
                    week.label(),
                    brand.clone(),
                    score.raw.prevalence.to_string(),
                    score.raw.diversity.to_string(),
                    format_float(score.raw.connectivity),
                    format_float(score.z_prevalence),
                    format_float(score.z_diversity),
                    format_float(score.z_connectivity),
                    format_float(score.sbs),
                ])
                .map_err(csv_err)?;
        }
    }
    writer.flush().map_err(|source| SbsError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Read a table back from [`write_timeseries_csv`] output. Absent weeks
/// leave no rows, so they are simply not present after a round trip.
pub fn read_timeseries_csv(
    path: &Path,
    voting_day: chrono::NaiveDate,
) -> Result<SbsTable, SbsError> {
    let parse_err = |message: String| SbsError::Parse {
        path: path.display().to_string(),
        message,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| parse_err(e.to_string()))?;
    let mut rows: BTreeMap<WeekWindow, WeekEntry> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| parse_err(e.to_string()))?;
        if record.len() != 9 {
            return Err(parse_err(format!(
                "expected 9 columns, got {}",
                record.len()
            )));
        }
        let week = WeekWindow::parse(&record[0], voting_day)
            .ok_or_else(|| parse_err(format!("bad week label {:?}", &record[0])))?;
        let brand = record[1].to_string();
        let num = |i: usize| -> Result<f64, SbsError> {
            record[i]
                .parse::<f64>()
                .map_err(|e| parse_err(format!("column {i}: {e}")))
        };
        let score = SbsScore {
            brand: brand.clone(),
            week,
            raw: RawScores {
                prevalence: num(2)? as u64,
                diversity: num(3)? as usize,
                connectivity: num(4)?,
            },
            z_prevalence: num(5)?,
            z_diversity: num(6)?,
            z_connectivity: num(7)?,
            sbs: num(8)?,
        };
        match rows
            .entry(week)
            .or_insert_with(|| WeekEntry::Scored(BTreeMap::new()))
        {
            WeekEntry::Scored(scores) => scores.insert(brand, score),
            WeekEntry::Absent => unreachable!(),
        };
    }
    Ok(SbsTable { rows })
}

/// Lossless float text: the shortest representation that round-trips.
pub fn format_float(v: f64) -> String {
    format!("{v}")
}
