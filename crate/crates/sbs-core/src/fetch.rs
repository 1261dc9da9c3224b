//! News API client: keyword queries over a date range, with a JSONL cache.
//!
//! Speaks a compatible subset of the Event Registry article search: a JSON
//! POST with OR-joined keywords and a date range, paginated results under
//! `articles.results`. The API key comes from the `SBS_NEWS_API_KEY`
//! environment variable at the CLI edge.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{write_jsonl, Article, IngestError};

/// Environment variable holding the API key.
pub const API_KEY_ENV: &str = "SBS_NEWS_API_KEY";

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("network error talking to {endpoint}: {message} (retriable)")]
    Network { endpoint: String, message: String },
    #[error("{endpoint} returned HTTP {status} (retriable: {retriable})")]
    Status {
        endpoint: String,
        status: u16,
        retriable: bool,
    },
    #[error("malformed response from {endpoint}: {message}")]
    BadResponse { endpoint: String, message: String },
    #[error("query needs at least one keyword")]
    NoKeywords,
    #[error(transparent)]
    Cache(#[from] IngestError),
}

impl FetchError {
    /// Whether a retry could plausibly succeed. Transport failures, HTTP
    /// 5xx and auth rejections (a key may be freshly provisioned) count as
    /// retriable; other client errors do not.
    pub fn is_retriable(&self) -> bool {
        match self {
            FetchError::Network { .. } => true,
            FetchError::Status { retriable, .. } => *retriable,
            _ => false,
        }
    }
}

/// Inclusive date range.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn is_empty(&self) -> bool {
        self.start > self.end
    }
}

#[derive(Debug, Serialize)]
struct ArticleQuery<'a> {
    keyword: &'a [String],
    #[serde(rename = "keywordOper")]
    keyword_oper: &'static str,
    #[serde(rename = "dateStart")]
    date_start: String,
    #[serde(rename = "dateEnd")]
    date_end: String,
    #[serde(rename = "articlesPage")]
    page: usize,
    #[serde(rename = "articlesCount")]
    count: usize,
    #[serde(rename = "apiKey")]
    api_key: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    lang: Option<&'a str>,
}

#[derive(Debug, Deserialize)]
struct ArticleEnvelope {
    articles: ArticlePage,
}

#[derive(Debug, Deserialize)]
struct ArticlePage {
    results: Vec<RemoteArticle>,
    #[serde(default)]
    pages: usize,
}

#[derive(Debug, Deserialize)]
struct RemoteArticle {
    #[serde(alias = "uri")]
    id: String,
    #[serde(alias = "date")]
    published: NaiveDate,
    #[serde(default)]
    title: String,
    #[serde(default)]
    body: String,
    #[serde(default)]
    source: Option<RemoteSource>,
    #[serde(default, alias = "lang")]
    language: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RemoteSource {
    Name(String),
    Tagged { uri: String },
}

impl From<RemoteArticle> for Article {
    fn from(remote: RemoteArticle) -> Self {
        Article {
            id: remote.id,
            published: remote.published,
            title: remote.title,
            body: remote.body,
            source: remote.source.map(|s| match s {
                RemoteSource::Name(name) => name,
                RemoteSource::Tagged { uri } => uri,
            }),
            language: remote.language,
        }
    }
}

/// Blocking news client with bounded retries on retriable failures.
pub struct NewsClient {
    endpoint: String,
    api_key: String,
    language: Option<String>,
    page_size: usize,
    max_attempts: usize,
    http: reqwest::blocking::Client,
}

impl NewsClient {
    pub fn new(endpoint: &str, api_key: &str) -> Self {
        NewsClient {
            endpoint: endpoint.trim_end_matches('/').to_string(),
            api_key: api_key.to_string(),
            language: None,
            page_size: 100,
            max_attempts: 3,
            http: reqwest::blocking::Client::builder()
                .timeout(Duration::from_secs(30))
                .build()
                .expect("client builds"),
        }
    }

    pub fn with_language(mut self, language: Option<String>) -> Self {
        self.language = language;
        self
    }

    pub fn with_page_size(mut self, page_size: usize) -> Self {
        self.page_size = page_size.max(1);
        self
    }

    /// Fetch every article matching any keyword (OR semantics) in the
    /// range, deduplicated by id and sorted by id, then persisted to
    /// `cache_path` as JSONL.
    pub fn fetch_news(
        &self,
        keywords: &[String],
        range: DateRange,
        cache_path: &Path,
    ) -> Result<Vec<Article>, FetchError> {
        if keywords.is_empty() {
            return Err(FetchError::NoKeywords);
        }
        if range.is_empty() {
            write_jsonl(cache_path, &[])?;
            return Ok(Vec::new());
        }

        let mut by_id: BTreeMap<String, Article> = BTreeMap::new();
        let mut page = 1;
        loop {
            let envelope = self.fetch_page(keywords, range, page)?;
            let results_len = envelope.articles.results.len();
            for remote in envelope.articles.results {
                let article = Article::from(remote);
                by_id.entry(article.id.clone()).or_insert(article);
            }
            if page >= envelope.articles.pages || results_len == 0 {
                break;
            }
            page += 1;
        }

        let articles: Vec<Article> = by_id.into_values().collect();
        write_jsonl(cache_path, &articles)?;
        Ok(articles)
    }

    fn fetch_page(
        &self,
        keywords: &[String],
        range: DateRange,
        page: usize,
    ) -> Result<ArticleEnvelope, FetchError> {
        let query = ArticleQuery {
            keyword: keywords,
            keyword_oper: "or",
            date_start: range.start.format("%Y-%m-%d").to_string(),
            date_end: range.end.format("%Y-%m-%d").to_string(),
            page,
            count: self.page_size,
            api_key: &self.api_key,
            lang: self.language.as_deref(),
        };
        let url = format!("{}/api/v1/article/getArticles", self.endpoint);

        let mut last_err = None;
        for attempt in 0..self.max_attempts {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(100 * attempt as u64));
            }
            match self.try_page(&url, &query) {
                Ok(envelope) => return Ok(envelope),
                Err(e) if e.is_retriable() => {
                    log::warn!("fetch attempt {} failed: {e}", attempt + 1);
                    last_err = Some(e);
                }
                Err(e) => return Err(e),
            }
        }
        Err(last_err.expect("at least one attempt ran"))
    }

    fn try_page(&self, url: &str, query: &ArticleQuery<'_>) -> Result<ArticleEnvelope, FetchError> {
        let response = self
            .http
            .post(url)
            .json(query)
            .send()
            .map_err(|e| FetchError::Network {
                endpoint: self.endpoint.clone(),
                message: e.to_string(),
            })?;
        let status = response.status();
        if !status.is_success() {
            return Err(FetchError::Status {
                endpoint: self.endpoint.clone(),
                status: status.as_u16(),
                retriable: status.is_server_error()
                    || status.as_u16() == 401
                    || status.as_u16() == 403
                    || status.as_u16() == 429,
            });
        }
        response
            .json::<ArticleEnvelope>()
            .map_err(|e| FetchError::BadResponse {
                endpoint: self.endpoint.clone(),
                message: e.to_string(),
            })
    }
}
