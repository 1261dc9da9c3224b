//! Text preprocessing: alias unification, truncation, tokenization,
//! stopword removal and snowball stemming.
//!
//! Stage order is fixed: aliases are substituted on the raw text first, so
//! multi-word names become single tokens and never straddle the truncation
//! cut; the truncated text is then tokenized, stopword-filtered and
//! stemmed. Canonical brand tokens survive every stage verbatim.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{Article, WeekWindow};

#[derive(Debug, Error)]
pub enum PrepError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid lexicon: {0}")]
    InvalidLexicon(String),
    #[error("invalid lexicon file {path}: {message}")]
    LexiconFile { path: String, message: String },
    #[error("unsupported stemmer language {0:?}")]
    UnsupportedLanguage(String),
    #[error("truncate_fraction must be in (0, 1], got {0}")]
    BadFraction(f64),
}

/// Canonical brand tokens and the alias phrases that map to them.
#[derive(Debug, Clone)]
pub struct BrandLexicon {
    entries: BTreeMap<String, Vec<String>>,
    canonical: BTreeSet<String>,
    /// Lowercased alias phrases as word sequences, longest first.
    phrases: Vec<(Vec<String>, String)>,
}

impl BrandLexicon {
    pub fn new(entries: BTreeMap<String, Vec<String>>) -> Result<Self, PrepError> {
        let mut phrases: Vec<(Vec<String>, String)> = Vec::new();
        let mut seen: BTreeMap<Vec<String>, String> = BTreeMap::new();
        for (canonical, aliases) in &entries {
            if canonical.is_empty()
                || canonical.chars().any(char::is_whitespace)
                || *canonical != canonical.to_lowercase()
            {
                return Err(PrepError::InvalidLexicon(format!(
                    "canonical token {canonical:?} must be lowercase with no whitespace"
                )));
            }
            if aliases.is_empty() {
                return Err(PrepError::InvalidLexicon(format!(
                    "canonical token {canonical:?} has no alias phrases"
                )));
            }
            for alias in aliases {
                let words: Vec<String> = alias
                    .to_lowercase()
                    .split_whitespace()
                    .map(str::to_string)
                    .collect();
                if words.is_empty() {
                    return Err(PrepError::InvalidLexicon(format!(
                        "empty alias phrase for {canonical:?}"
                    )));
                }
                if let Some(other) = seen.get(&words) {
                    if other != canonical {
                        return Err(PrepError::InvalidLexicon(format!(
                            "alias {alias:?} maps to both {other:?} and {canonical:?}"
                        )));
                    }
                } else {
                    seen.insert(words.clone(), canonical.clone());
                    phrases.push((words, canonical.clone()));
                }
            }
        }
        // Longest phrase first; ties resolved lexicographically so the
        // match order never depends on map iteration.
        phrases.sort_by(|a, b| {
            b.0.len()
                .cmp(&a.0.len())
                .then_with(|| a.0.cmp(&b.0))
                .then_with(|| a.1.cmp(&b.1))
        });
        let canonical = entries.keys().cloned().collect();
        Ok(BrandLexicon {
            entries,
            canonical,
            phrases,
        })
    }

    /// Load from a JSON file mapping canonical token -> [alias phrases].
    pub fn from_json_file(path: &Path) -> Result<Self, PrepError> {
        let file = File::open(path).map_err(|source| PrepError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let entries: BTreeMap<String, Vec<String>> = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| PrepError::LexiconFile {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
        Self::new(entries)
    }

    pub fn is_canonical(&self, token: &str) -> bool {
        self.canonical.contains(token)
    }

    pub fn canonical_tokens(&self) -> impl Iterator<Item = &str> {
        self.canonical.iter().map(String::as_str)
    }

    pub fn entries(&self) -> &BTreeMap<String, Vec<String>> {
        &self.entries
    }

    /// An empty lexicon: no substitutions, no exempt tokens.
    pub fn empty() -> Self {
        BrandLexicon {
            entries: BTreeMap::new(),
            canonical: BTreeSet::new(),
            phrases: Vec::new(),
        }
    }
}

/// Preprocessing parameters. `window` and `prune_min` for the graph stage
/// live in [`crate::graph::GraphConfig`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrepConfig {
    pub stopwords: BTreeSet<String>,
    pub stemmer_language: String,
    pub truncate_fraction: f64,
    pub drop_numeric: bool,
}

impl Default for PrepConfig {
    fn default() -> Self {
        PrepConfig {
            stopwords: BTreeSet::new(),
            stemmer_language: "italian".into(),
            truncate_fraction: 0.30,
            drop_numeric: false,
        }
    }
}

impl PrepConfig {
    pub fn validate(&self) -> Result<(), PrepError> {
        if !(self.truncate_fraction > 0.0 && self.truncate_fraction <= 1.0) {
            return Err(PrepError::BadFraction(self.truncate_fraction));
        }
        stemmer_for(&self.stemmer_language)?;
        Ok(())
    }
}

/// An article reduced to its canonical token stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenDoc {
    pub doc_id: String,
    pub week: WeekWindow,
    pub tokens: Vec<String>,
}

/// Build a snowball stemmer for a language named in config ("italian",
/// "english", ...). Unsupported names error out at config load.
pub fn stemmer_for(language: &str) -> Result<Stemmer, PrepError> {
    let algorithm = match language.to_lowercase().as_str() {
        "arabic" => Algorithm::Arabic,
        "danish" => Algorithm::Danish,
        "dutch" => Algorithm::Dutch,
        "english" => Algorithm::English,
        "finnish" => Algorithm::Finnish,
        "french" => Algorithm::French,
        "german" => Algorithm::German,
        "greek" => Algorithm::Greek,
        "hungarian" => Algorithm::Hungarian,
        "italian" => Algorithm::Italian,
        "norwegian" => Algorithm::Norwegian,
        "portuguese" => Algorithm::Portuguese,
        "romanian" => Algorithm::Romanian,
        "russian" => Algorithm::Russian,
        "spanish" => Algorithm::Spanish,
        "swedish" => Algorithm::Swedish,
        "tamil" => Algorithm::Tamil,
        "turkish" => Algorithm::Turkish,
        _ => return Err(PrepError::UnsupportedLanguage(language.into())),
    };
    Ok(Stemmer::create(algorithm))
}

/// Load a stopword file: UTF-8, one lowercase word per line, `#` comments.
pub fn load_stopwords(path: &Path) -> Result<BTreeSet<String>, PrepError> {
    let file = File::open(path).map_err(|source| PrepError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut words = BTreeSet::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|source| PrepError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let word = line.trim();
        if word.is_empty() || word.starts_with('#') {
            continue;
        }
        words.insert(word.to_lowercase());
    }
    Ok(words)
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Byte spans of maximal word-character runs.
fn word_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    for (idx, c) in text.char_indices() {
        if is_word_char(c) {
            if start.is_none() {
                start = Some(idx);
            }
        } else if let Some(s) = start.take() {
            spans.push((s, idx));
        }
    }
    if let Some(s) = start {
        spans.push((s, text.len()));
    }
    spans
}

/// Replace every case-insensitive occurrence of an alias phrase with its
/// canonical token. Longest phrases match first; matched spans are
/// consumed, the surrounding text is untouched.
pub fn normalize_aliases(text: &str, lexicon: &BrandLexicon) -> String {
    if lexicon.phrases.is_empty() {
        return text.to_string();
    }
    let spans = word_spans(text);
    let words: Vec<String> = spans
        .iter()
        .map(|&(s, e)| text[s..e].to_lowercase())
        .collect();
    let mut replacements: Vec<(usize, usize, &str)> = Vec::new();
    let mut i = 0;
    while i < words.len() {
        let mut matched = None;
        for (phrase, canonical) in &lexicon.phrases {
            if i + phrase.len() <= words.len()
                && phrase.iter().zip(&words[i..]).all(|(p, w)| p == w)
            {
                matched = Some((phrase.len(), canonical.as_str()));
                break;
            }
        }
        if let Some((len, canonical)) = matched {
            replacements.push((spans[i].0, spans[i + len - 1].1, canonical));
            i += len;
        } else {
            i += 1;
        }
    }
    if replacements.is_empty() {
        return text.to_string();
    }
    let mut out = String::with_capacity(text.len());
    let mut cursor = 0;
    for (start, end, canonical) in replacements {
        out.push_str(&text[cursor..start]);
        out.push_str(canonical);
        cursor = end;
    }
    out.push_str(&text[cursor..]);
    out
}

/// Keep the leading `fraction` of the title+body word stream.
///
/// Words are whitespace-delimited; the count is rounded up, so non-empty
/// input always yields at least one word.
pub fn truncate(title_text: &str, body_text: &str, fraction: f64) -> String {
    let words: Vec<&str> = title_text
        .split_whitespace()
        .chain(body_text.split_whitespace())
        .collect();
    if words.is_empty() {
        return String::new();
    }
    // The subtraction guards against float noise pushing an exact product
    // like 0.30 * 10 just above its integer value.
    let keep = ((fraction * words.len() as f64) - 1e-9).ceil() as usize;
    let keep = keep.clamp(1, words.len());
    words[..keep].join(" ")
}

/// Lowercase and split into tokens: maximal runs of alphanumeric
/// characters or `_`; everything else separates.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !is_word_char(c))
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Drop stopwords. Canonical brand tokens are never dropped, even when
/// they collide with a stopword.
pub fn remove_stopwords(
    tokens: Vec<String>,
    stopwords: &BTreeSet<String>,
    lexicon: &BrandLexicon,
) -> Vec<String> {
    tokens
        .into_iter()
        .filter(|t| !stopwords.contains(t) || lexicon.is_canonical(t))
        .collect()
}

/// Stem every token except canonical brand tokens.
pub fn stem(tokens: Vec<String>, stemmer: &Stemmer, lexicon: &BrandLexicon) -> Vec<String> {
    tokens
        .into_iter()
        .map(|t| {
            if lexicon.is_canonical(&t) {
                t
            } else {
                stemmer.stem(&t).into_owned()
            }
        })
        .collect()
}

/// The full per-article pipeline, bundling the lexicon, stopwords and
/// stemmer so the stages run in their fixed order.
pub struct Preprocessor {
    lexicon: BrandLexicon,
    config: PrepConfig,
    stemmer: Stemmer,
}

impl Preprocessor {
    pub fn new(lexicon: BrandLexicon, config: PrepConfig) -> Result<Self, PrepError> {
        config.validate()?;
        let stemmer = stemmer_for(&config.stemmer_language)?;
        Ok(Preprocessor {
            lexicon,
            config,
            stemmer,
        })
    }

    pub fn lexicon(&self) -> &BrandLexicon {
        &self.lexicon
    }

    /// aliases -> truncate -> tokenize -> stopwords -> stem
    pub fn preprocess(&self, article: &Article, week: WeekWindow) -> TokenDoc {
        let title = normalize_aliases(&article.title, &self.lexicon);
        let body = normalize_aliases(&article.body, &self.lexicon);
        let truncated = truncate(&title, &body, self.config.truncate_fraction);
        let tokens = tokenize(&truncated);
        let mut tokens = remove_stopwords(tokens, &self.config.stopwords, &self.lexicon);
        if self.config.drop_numeric {
            tokens.retain(|t| self.lexicon.is_canonical(t) || !t.chars().all(char::is_numeric));
        }
        let tokens = stem(tokens, &self.stemmer, &self.lexicon);
        TokenDoc {
            doc_id: article.id.clone(),
            week,
            tokens,
        }
    }
}
