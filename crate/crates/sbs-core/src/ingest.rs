//! Article ingestion, period filtering and weekly bucketing.
//!
//! Corpora are JSONL files, one article per line. Analysis windows are
//! ISO-8601 calendar weeks (Monday start), labelled like `2016-W21`, with
//! a lag counted in whole weeks back from the week containing the voting
//! day.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot open {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed article: {message}")]
    MalformedLine {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: duplicate article id {id:?}")]
    DuplicateId {
        path: String,
        line: usize,
        id: String,
    },
    #[error("invalid event config: {0}")]
    InvalidEvent(String),
}

/// One dated news item, the unit of ingestion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub id: String,
    pub published: NaiveDate,
    pub title: String,
    pub body: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
}

impl Article {
    fn validate(&self) -> Result<(), String> {
        if self.id.is_empty() {
            return Err("empty id".into());
        }
        if self.title.is_empty() && self.body.is_empty() {
            return Err(format!("article {:?} has empty title and body", self.id));
        }
        Ok(())
    }
}

/// One poll publication: the date it was released and the shares it reported.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PollRecord {
    pub date: NaiveDate,
    pub shares: BTreeMap<String, f64>,
}

/// A voting event: the dates that bound the analysis and the options to track.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventConfig {
    pub voting_day: NaiveDate,
    pub analysis_start: NaiveDate,
    pub analysis_end: NaiveDate,
    pub tracked_brands: Vec<String>,
    #[serde(default)]
    pub keywords: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poll_records: Option<Vec<PollRecord>>,
}

impl EventConfig {
    /// Check the date ordering and tracked-option invariants.
    pub fn validate(&self) -> Result<(), IngestError> {
        if self.analysis_start >= self.analysis_end {
            return Err(IngestError::InvalidEvent(format!(
                "analysis_start {} must precede analysis_end {}",
                self.analysis_start, self.analysis_end
            )));
        }
        if self.analysis_end >= self.voting_day {
            return Err(IngestError::InvalidEvent(format!(
                "analysis_end {} must be at latest the day before voting day {}",
                self.analysis_end, self.voting_day
            )));
        }
        if self.tracked_brands.is_empty() {
            return Err(IngestError::InvalidEvent(
                "tracked_brands must not be empty".into(),
            ));
        }
        Ok(())
    }
}

/// One ISO calendar week of the analysis period.
///
/// `lag` is the number of whole ISO weeks between this week and the week
/// containing the voting day (0 = the voting week itself).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WeekWindow {
    pub iso_year: i32,
    pub iso_week: u32,
    pub lag: i64,
}

impl WeekWindow {
    /// The week containing `date`, with lag measured against `voting_day`.
    pub fn of(date: NaiveDate, voting_day: NaiveDate) -> Self {
        let iso = date.iso_week();
        WeekWindow {
            iso_year: iso.year(),
            iso_week: iso.week(),
            lag: weeks_between(date, voting_day),
        }
    }

    /// Label in the `YYYY-Www` form used in all reports, e.g. `2016-W21`.
    pub fn label(&self) -> String {
        format!("{}-W{:02}", self.iso_year, self.iso_week)
    }

    /// Parse a `YYYY-Www` label back into a window, given the voting day.
    pub fn parse(label: &str, voting_day: NaiveDate) -> Option<Self> {
        let (year, week) = label.split_once("-W")?;
        let iso_year: i32 = year.parse().ok()?;
        let iso_week: u32 = week.parse().ok()?;
        let monday = NaiveDate::from_isoywd_opt(iso_year, iso_week, Weekday::Mon)?;
        Some(WeekWindow::of(monday, voting_day))
    }
}

impl std::fmt::Display for WeekWindow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.label())
    }
}

fn monday_of(date: NaiveDate) -> NaiveDate {
    let iso = date.iso_week();
    NaiveDate::from_isoywd_opt(iso.year(), iso.week(), Weekday::Mon)
        .expect("ISO week of a valid date is valid")
}

/// Whole ISO weeks from the week of `date` to the week of `reference`.
fn weeks_between(date: NaiveDate, reference: NaiveDate) -> i64 {
    (monday_of(reference) - monday_of(date)).num_days() / 7
}

/// Read a JSONL corpus. Unknown fields are ignored; article order is
/// preserved. Malformed lines and duplicate ids are errors that name the
/// offending line.
pub fn read_jsonl(path: &Path) -> Result<Vec<Article>, IngestError> {
    let file = File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut articles = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|source| IngestError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let article: Article =
            serde_json::from_str(&line).map_err(|e| IngestError::MalformedLine {
                path: path.display().to_string(),
                line: lineno,
                message: e.to_string(),
            })?;
        article
            .validate()
            .map_err(|message| IngestError::MalformedLine {
                path: path.display().to_string(),
                line: lineno,
                message,
            })?;
        if !seen.insert(article.id.clone()) {
            return Err(IngestError::DuplicateId {
                path: path.display().to_string(),
                line: lineno,
                id: article.id,
            });
        }
        articles.push(article);
    }
    Ok(articles)
}

/// Write articles as JSONL, one object per line, in the given order.
pub fn write_jsonl(path: &Path, articles: &[Article]) -> Result<(), IngestError> {
    let file = File::create(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut writer = BufWriter::new(file);
    for article in articles {
        let line = serde_json::to_string(article).expect("article serializes");
        writeln!(writer, "{line}").map_err(|source| IngestError::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    writer.flush().map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Keep only articles inside the analysis period. The voting day itself is
/// always excluded, even if the period were misconfigured to include it.
pub fn filter_period(articles: &[Article], config: &EventConfig) -> Vec<Article> {
    articles
        .iter()
        .filter(|a| {
            a.published >= config.analysis_start
                && a.published <= config.analysis_end
                && a.published != config.voting_day
        })
        .cloned()
        .collect()
}

/// Bucket period-filtered articles into ISO weeks.
pub fn group_by_week(
    articles: &[Article],
    config: &EventConfig,
) -> BTreeMap<WeekWindow, Vec<Article>> {
    let mut buckets: BTreeMap<WeekWindow, Vec<Article>> = BTreeMap::new();
    for article in articles {
        let week = WeekWindow::of(article.published, config.voting_day);
        buckets.entry(week).or_default().push(article.clone());
    }
    buckets
}

/// Every ISO week touched by the analysis period, in chronological order.
/// Weeks without articles still appear here so they can be reported as
/// absent rather than silently skipped.
pub fn analysis_weeks(config: &EventConfig) -> Vec<WeekWindow> {
    let mut weeks = Vec::new();
    let mut monday = monday_of(config.analysis_start);
    let last = monday_of(config.analysis_end);
    while monday <= last {
        weeks.push(WeekWindow::of(monday, config.voting_day));
        monday += Duration::days(7);
    }
    weeks
}
