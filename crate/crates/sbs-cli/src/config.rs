//! Run configuration: one JSON file describing the event, the input
//! files and every method parameter, with the standard defaults baked in
//! so a minimal config runs the reference method verbatim.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use sbs_core::graph::GraphConfig;
use sbs_core::ingest::{EventConfig, PollRecord};
use sbs_core::textprep::{stemmer_for, BrandLexicon, PrepConfig};

use crate::CliError;

/// Preprocessing block as written in the config file: file paths instead
/// of loaded word sets.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrepSettings {
    #[serde(default)]
    pub stopwords_path: Option<PathBuf>,
    #[serde(default = "default_stemmer")]
    pub stemmer_language: String,
    #[serde(default = "default_fraction")]
    pub truncate_fraction: f64,
    #[serde(default)]
    pub drop_numeric: bool,
}

impl Default for PrepSettings {
    fn default() -> Self {
        PrepSettings {
            stopwords_path: None,
            stemmer_language: default_stemmer(),
            truncate_fraction: default_fraction(),
            drop_numeric: false,
        }
    }
}

fn default_stemmer() -> String {
    "italian".into()
}

fn default_fraction() -> f64 {
    0.30
}

fn default_parallelism() -> usize {
    1
}

fn default_clamp() -> bool {
    true
}

/// News API settings for the `fetch` subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FetchSettings {
    pub endpoint: String,
    #[serde(default)]
    pub language: Option<String>,
    #[serde(default)]
    pub page_size: Option<usize>,
}

/// The whole run configuration as loaded from `--config`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub event: EventConfig,
    #[serde(default)]
    pub prep: PrepSettings,
    #[serde(default)]
    pub graph: GraphConfig,
    pub lexicon_path: PathBuf,
    #[serde(default)]
    pub corpus_path: Option<PathBuf>,
    #[serde(default)]
    pub polls_path: Option<PathBuf>,
    /// Official shares per option, as fractions in [0, 1].
    #[serde(default)]
    pub official_results: Option<BTreeMap<String, f64>>,
    #[serde(default)]
    pub fetch: Option<FetchSettings>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default = "default_clamp")]
    pub clamp_scores: bool,
    #[serde(default)]
    pub dump_networks: bool,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// A loaded, validated configuration with all referenced files resolved
/// relative to the config file's directory.
pub struct LoadedConfig {
    pub run: RunConfig,
    pub lexicon: BrandLexicon,
    pub prep: PrepConfig,
}

impl LoadedConfig {
    pub fn corpus_path(&self) -> Result<&Path, CliError> {
        self.run
            .corpus_path
            .as_deref()
            .ok_or_else(|| CliError::usage("config has no corpus_path"))
    }
}

fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

/// Load and validate the config. `require_corpus` makes a missing corpus
/// file a load-time error (every subcommand except `fetch`, which creates
/// it).
pub fn load_config(path: &Path, require_corpus: bool) -> Result<LoadedConfig, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::usage(format!("cannot open config {}: {e}", path.display())))?;
    let mut run: RunConfig = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))?;

    let base = path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .to_path_buf();
    run.lexicon_path = resolve(&base, &run.lexicon_path);
    run.corpus_path = run.corpus_path.map(|p| resolve(&base, &p));
    run.polls_path = run.polls_path.map(|p| resolve(&base, &p));
    run.output_dir = resolve(&base, &run.output_dir);
    if let Some(p) = run.prep.stopwords_path.take() {
        run.prep.stopwords_path = Some(resolve(&base, &p));
    }

    run.event
        .validate()
        .map_err(|e| CliError::usage(format!("config: {e}")))?;
    run.graph
        .validate()
        .map_err(|e| CliError::usage(format!("config: {e}")))?;
    if run.parallelism < 1 {
        return Err(CliError::usage("config: parallelism must be >= 1"));
    }
    stemmer_for(&run.prep.stemmer_language).map_err(|e| CliError::usage(format!("config: {e}")))?;
    if !(run.prep.truncate_fraction > 0.0 && run.prep.truncate_fraction <= 1.0) {
        return Err(CliError::usage(format!(
            "config: truncate_fraction must be in (0, 1], got {}",
            run.prep.truncate_fraction
        )));
    }
    if let Some(results) = &run.official_results {
        for (option, share) in results {
            if !(0.0..=1.0).contains(share) {
                return Err(CliError::usage(format!(
                    "config: official share for {option:?} must be a fraction in [0, 1], got {share}"
                )));
            }
        }
    }

    let lexicon = BrandLexicon::from_json_file(&run.lexicon_path)
        .map_err(|e| CliError::usage(format!("config: {e}")))?;
    for brand in &run.event.tracked_brands {
        if brand.is_empty() || brand.chars().any(char::is_whitespace) {
            return Err(CliError::usage(format!(
                "config: tracked brand {brand:?} is not a valid token"
            )));
        }
        if !lexicon.is_canonical(brand) {
            log::warn!("tracked brand {brand:?} has no lexicon entry; it must appear literally in the text");
        }
    }

    let stopwords = match &run.prep.stopwords_path {
        Some(p) => sbs_core::textprep::load_stopwords(p)
            .map_err(|e| CliError::usage(format!("config: {e}")))?,
        None => Default::default(),
    };

    if require_corpus {
        let corpus = run
            .corpus_path
            .as_deref()
            .ok_or_else(|| CliError::usage("config has no corpus_path"))?;
        if !corpus.exists() {
            return Err(CliError::usage(format!(
                "corpus {} does not exist (run `sbs fetch` or point corpus_path at a JSONL file)",
                corpus.display()
            )));
        }
    }

    if let Some(polls_path) = &run.polls_path {
        let records = load_polls_csv(polls_path)?;
        run.event.poll_records = Some(records);
    }

    let prep = PrepConfig {
        stopwords,
        stemmer_language: run.prep.stemmer_language.clone(),
        truncate_fraction: run.prep.truncate_fraction,
        drop_numeric: run.prep.drop_numeric,
    };

    Ok(LoadedConfig { run, lexicon, prep })
}

/// Poll CSV: columns `date,option,share`, one row per option per poll,
/// shares as fractions. Rows sharing a date form one poll record.
pub fn load_polls_csv(path: &Path) -> Result<Vec<PollRecord>, CliError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::usage(format!("cannot read polls {}: {e}", path.display())))?;
    let mut by_date: BTreeMap<NaiveDate, BTreeMap<String, f64>> = BTreeMap::new();
    for (idx, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| CliError::usage(format!("polls {}: {e}", path.display())))?;
        if record.len() != 3 {
            return Err(CliError::usage(format!(
                "polls {}: row {} has {} columns, expected date,option,share",
                path.display(),
                idx + 2,
                record.len()
            )));
        }
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d").map_err(|e| {
            CliError::usage(format!("polls {}: row {}: {e}", path.display(), idx + 2))
        })?;
        let share: f64 = record[2].parse().map_err(|e| {
            CliError::usage(format!("polls {}: row {}: {e}", path.display(), idx + 2))
        })?;
        if !(0.0..=1.0).contains(&share) {
            return Err(CliError::usage(format!(
                "polls {}: row {}: share {share} is not a fraction in [0, 1]",
                path.display(),
                idx + 2
            )));
        }
        by_date
            .entry(date)
            .or_default()
            .insert(record[1].to_string(), share);
    }
    Ok(by_date
        .into_iter()
        .map(|(date, shares)| PollRecord { date, shares })
        .collect())
}

/// The parameter block written into every report for provenance. Output
/// location and worker count are deliberately excluded: results must not
/// depend on them.
#[derive(Debug, Serialize)]
pub struct ReportParameters {
    pub voting_day: NaiveDate,
    pub analysis_start: NaiveDate,
    pub analysis_end: NaiveDate,
    pub tracked_brands: Vec<String>,
    pub keywords: Vec<String>,
    pub stemmer_language: String,
    pub truncate_fraction: f64,
    pub drop_numeric: bool,
    pub window: usize,
    pub prune_min: u32,
    pub clamp_scores: bool,
    pub corpus_path: Option<String>,
    pub lexicon_path: String,
    pub stopwords_path: Option<String>,
    pub polls_path: Option<String>,
}

impl ReportParameters {
    pub fn from_config(config: &LoadedConfig, clamp: bool) -> Self {
        let run = &config.run;
        ReportParameters {
            voting_day: run.event.voting_day,
            analysis_start: run.event.analysis_start,
            analysis_end: run.event.analysis_end,
            tracked_brands: run.event.tracked_brands.clone(),
            keywords: run.event.keywords.clone(),
            stemmer_language: run.prep.stemmer_language.clone(),
            truncate_fraction: run.prep.truncate_fraction,
            drop_numeric: run.prep.drop_numeric,
            window: run.graph.window,
            prune_min: run.graph.prune_min,
            clamp_scores: clamp,
            corpus_path: run.corpus_path.as_ref().map(|p| p.display().to_string()),
            lexicon_path: run.lexicon_path.display().to_string(),
            stopwords_path: run
                .prep
                .stopwords_path
                .as_ref()
                .map(|p| p.display().to_string()),
            polls_path: run.polls_path.as_ref().map(|p| p.display().to_string()),
        }
    }
}
