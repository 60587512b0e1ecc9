//! Scholarly search gateway: search with leakage filtering, metadata fetch,
//! and full-text retrieval over a pluggable provider, with caching, rate
//! limiting and transport retries.

mod cache;
mod provider;
mod ratelimit;
mod recorded;
mod semantic_scholar;

use std::path::PathBuf;
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use log::{debug, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{PaperDate, PaperMeta};

pub use cache::ResponseCache;
pub use provider::{CountingProvider, ProviderError, ScholarProvider};
pub use ratelimit::RateLimiter;
pub use recorded::{RecordedError, RecordedProvider, RecordedSearch};
pub use semantic_scholar::{SemanticScholarProvider, API_KEY_ENV, DEFAULT_BASE_URL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SortOrder {
    Relevance,
    CitationCount,
}

impl SortOrder {
    pub fn as_str(&self) -> &'static str {
        match self {
            SortOrder::Relevance => "relevance",
            SortOrder::CitationCount => "citation_count",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchQuery {
    pub query: String,
    pub sort: SortOrder,
    pub issued_for: String,
}

/// Where papers come from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProviderLocator {
    Live { base_url: Option<String> },
    Recorded { dir: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatewayConfig {
    pub provider: ProviderLocator,
    pub requests_per_second: f64,
    pub cache_dir: Option<PathBuf>,
    pub timeout: Duration,
    /// Attempts per provider call for transient failures.
    pub attempts: u32,
    /// Delay before the second attempt; doubles after each failure.
    pub retry_backoff: Duration,
}

impl GatewayConfig {
    /// Offline fixture directory; local reads need no throttling.
    pub fn recorded(dir: impl Into<PathBuf>) -> Self {
        Self { requests_per_second: 10_000.0, ..Self::new(ProviderLocator::Recorded { dir: dir.into() }) }
    }

    pub fn live(base_url: Option<String>) -> Self {
        Self::new(ProviderLocator::Live { base_url })
    }

    pub fn new(provider: ProviderLocator) -> Self {
        Self {
            provider,
            requests_per_second: 1.0,
            cache_dir: None,
            timeout: Duration::from_secs(30),
            attempts: 3,
            retry_backoff: Duration::from_secs(1),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GatewayError {
    #[error("paper `{0}` not found")]
    NotFound(String),
    #[error("no full text for `{paper_id}`: {reason}")]
    MissingFullText { paper_id: String, reason: String },
    #[error("provider failure: {0}")]
    ProviderFailure(String),
    #[error("invalid request: {0}")]
    Invalid(String),
}

/// Filtered search results plus the number of raw provider results consumed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub results: Vec<PaperMeta>,
    pub raw_count: usize,
}

/// How many provider pages a search may pull to refill after filtering.
pub const MAX_REFILL_PAGES: usize = 5;
const MAX_RATE_LIMIT_WAITS: u32 = 20;

pub struct Gateway {
    provider: Arc<dyn ScholarProvider>,
    cache: ResponseCache,
    limiter: RateLimiter,
    attempts: u32,
    retry_backoff: Duration,
}

pub(crate) fn normalize_query(query: &str) -> String {
    query.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Applies the leakage filter and truncation to one provider page, appending
/// survivors to `kept` until it holds `top_k` papers.
pub fn filter_results(
    raw: impl IntoIterator<Item = PaperMeta>,
    source_paper_id: &str,
    source_date: PaperDate,
    top_k: usize,
    kept: &mut Vec<PaperMeta>,
) {
    for paper in raw {
        if kept.len() >= top_k {
            break;
        }
        if paper.paper_id == source_paper_id
            || paper.pub_date > source_date
            || kept.iter().any(|k| k.paper_id == paper.paper_id)
        {
            continue;
        }
        kept.push(paper);
    }
}

impl Gateway {
    pub fn new(provider: Arc<dyn ScholarProvider>, config: &GatewayConfig) -> Result<Self, GatewayError> {
        if !(config.requests_per_second > 0.0 && config.requests_per_second.is_finite()) {
            return Err(GatewayError::Invalid("requests_per_second must be positive".into()));
        }
        let cache = ResponseCache::new(config.cache_dir.clone())
            .map_err(|e| GatewayError::Invalid(format!("cache directory: {e}")))?;
        Ok(Self {
            provider,
            cache,
            limiter: RateLimiter::new(config.requests_per_second),
            attempts: config.attempts.max(1),
            retry_backoff: config.retry_backoff,
        })
    }

    /// Builds the provider named by `config.provider`.
    pub fn from_config(config: &GatewayConfig) -> Result<Self, GatewayError> {
        let provider: Arc<dyn ScholarProvider> = match &config.provider {
            ProviderLocator::Live { base_url } => Arc::new(
                SemanticScholarProvider::new(base_url.as_deref(), config.timeout)
                    .map_err(|e| GatewayError::Invalid(e.to_string()))?,
            ),
            ProviderLocator::Recorded { dir } => Arc::new(
                RecordedProvider::open(dir).map_err(|e| GatewayError::Invalid(e.to_string()))?,
            ),
        };
        Self::new(provider, config)
    }

    pub fn provider_name(&self) -> &str {
        self.provider.name()
    }

    fn call<T>(&self, what: &str, f: impl Fn() -> Result<T, ProviderError>) -> Result<T, GatewayError> {
        let mut failures = 0;
        let mut waits = 0;
        loop {
            self.limiter.acquire();
            match f() {
                Ok(v) => return Ok(v),
                Err(ProviderError::RateLimited { retry_after }) if waits < MAX_RATE_LIMIT_WAITS => {
                    waits += 1;
                    let delay = retry_after.unwrap_or(self.retry_backoff * 2u32.pow(waits.min(6)));
                    debug!("{what}: rate limited, waiting {delay:?}");
                    thread::sleep(delay);
                }
                Err(ProviderError::Transient(msg)) if failures + 1 < self.attempts => {
                    let delay = self.retry_backoff * 2u32.pow(failures);
                    failures += 1;
                    warn!("{what}: {msg}; retry {failures} in {delay:?}");
                    thread::sleep(delay);
                }
                Err(e) => return Err(GatewayError::ProviderFailure(format!("{what}: {e}"))),
            }
        }
    }

    fn search_page(
        &self,
        query: &str,
        sort: SortOrder,
        offset: usize,
        limit: usize,
    ) -> Result<Vec<PaperMeta>, GatewayError> {
        let key = format!(
            "{}|search|{}|{}|{}|{}",
            self.provider.name(),
            normalize_query(query),
            sort.as_str(),
            offset,
            limit
        );
        if let Some(hit) = self.cache.get::<Vec<PaperMeta>>("search", &key) {
            return Ok(hit);
        }
        let page = self.call("search", || self.provider.search(query, sort, offset, limit))?;
        if let Err(e) = self.cache.put("search", &key, &page) {
            warn!("cache write failed: {e}");
        }
        Ok(page)
    }

    /// Provider results for `q` with papers newer than `source_date` and the
    /// source paper itself removed, truncated to `top_k`. Pages are pulled
    /// until `top_k` survivors are found or the provider runs dry.
    pub fn search(
        &self,
        q: &SearchQuery,
        source_paper_id: &str,
        source_date: PaperDate,
        top_k: usize,
    ) -> Result<SearchOutcome, GatewayError> {
        if top_k == 0 {
            return Err(GatewayError::Invalid("top_k must be at least 1".into()));
        }
        if q.query.trim().is_empty() {
            return Err(GatewayError::Invalid("empty query".into()));
        }
        let mut kept = Vec::with_capacity(top_k);
        let mut raw_count = 0;
        for page in 0..MAX_REFILL_PAGES {
            let raw = self.search_page(&q.query, q.sort, page * top_k, top_k)?;
            let exhausted = raw.len() < top_k;
            raw_count += raw.len();
            filter_results(raw, source_paper_id, source_date, top_k, &mut kept);
            if kept.len() >= top_k || exhausted {
                break;
            }
        }
        Ok(SearchOutcome { results: kept, raw_count })
    }

    pub fn get_paper(&self, paper_id: &str) -> Result<PaperMeta, GatewayError> {
        if paper_id.trim().is_empty() {
            return Err(GatewayError::Invalid("empty paper id".into()));
        }
        let key = format!("{}|paper|{}", self.provider.name(), paper_id);
        let found = match self.cache.get::<Option<PaperMeta>>("paper", &key) {
            Some(hit) => hit,
            None => {
                let fetched = self.call("paper", || self.provider.paper(paper_id))?;
                if let Err(e) = self.cache.put("paper", &key, &fetched) {
                    warn!("cache write failed: {e}");
                }
                fetched
            }
        };
        found.ok_or_else(|| GatewayError::NotFound(paper_id.to_string()))
    }

    /// Open-access document bytes. Absent locators, unknown papers and dead
    /// links all surface as `MissingFullText`.
    pub fn get_fulltext_document(&self, paper_id: &str) -> Result<Vec<u8>, GatewayError> {
        let missing = |reason: &str| GatewayError::MissingFullText {
            paper_id: paper_id.to_string(),
            reason: reason.to_string(),
        };
        let meta = match self.get_paper(paper_id) {
            Ok(m) => m,
            Err(GatewayError::NotFound(_)) => return Err(missing("paper not found")),
            Err(e) => return Err(e),
        };
        let locator = meta.fulltext_locator.ok_or_else(|| missing("no open-access link"))?;
        let key = format!("{}|document|{}", self.provider.name(), locator);
        let absent_key = format!("{key}|absent");
        if let Some(bytes) = self.cache.get_bytes("document", &key) {
            return Ok(bytes);
        }
        if self.cache.get_bytes("document", &absent_key).is_some() {
            return Err(missing("link does not resolve"));
        }
        match self.call("document", || self.provider.document(&locator))? {
            Some(bytes) => {
                if let Err(e) = self.cache.put_bytes("document", &key, &bytes) {
                    warn!("cache write failed: {e}");
                }
                Ok(bytes)
            }
            None => {
                if let Err(e) = self.cache.put_bytes("document", &absent_key, b"") {
                    warn!("cache write failed: {e}");
                }
                Err(missing("link does not resolve"))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Mutex;

    fn paper(id: &str, year: i32) -> PaperMeta {
        PaperMeta {
            paper_id: id.into(),
            title: format!("Title {id}"),
            r#abstract: String::new(),
            citation_count: 0,
            pub_date: PaperDate::from_year(year).unwrap(),
            fulltext_locator: None,
        }
    }

    /// Serves a fixed result list, paged.
    struct ListProvider(Vec<PaperMeta>);
    impl ScholarProvider for ListProvider {
        fn name(&self) -> &str {
            "list"
        }
        fn search(&self, _: &str, _: SortOrder, offset: usize, limit: usize) -> Result<Vec<PaperMeta>, ProviderError> {
            Ok(self.0.iter().skip(offset).take(limit).cloned().collect())
        }
        fn paper(&self, id: &str) -> Result<Option<PaperMeta>, ProviderError> {
            Ok(self.0.iter().find(|p| p.paper_id == id).cloned())
        }
        fn document(&self, _: &str) -> Result<Option<Vec<u8>>, ProviderError> {
            Ok(None)
        }
    }

    fn gateway(papers: Vec<PaperMeta>) -> (Gateway, Arc<CountingProvider>) {
        let counting = Arc::new(CountingProvider::new(Arc::new(ListProvider(papers))));
        let mut config = GatewayConfig::new(ProviderLocator::Recorded { dir: PathBuf::new() });
        config.requests_per_second = 10_000.0;
        config.retry_backoff = Duration::from_millis(1);
        (Gateway::new(counting.clone(), &config).unwrap(), counting)
    }

    fn query(q: &str) -> SearchQuery {
        SearchQuery { query: q.into(), sort: SortOrder::Relevance, issued_for: "i".into() }
    }

    fn src_date() -> PaperDate {
        PaperDate::new(2015, 12, 10).unwrap()
    }

    #[test]
    fn filters_source_and_future_then_truncates() {
        let mut papers: Vec<_> = (0..12).map(|i| paper(&format!("p{i}"), 2010)).collect();
        papers[3] = paper("source", 2015);
        papers[7] = paper("future", 2016);
        let (gw, _) = gateway(papers);
        let out = gw.search(&query("q"), "source", src_date(), 10).unwrap();
        assert_eq!(out.results.len(), 10);
        assert!(out.results.iter().all(|p| p.paper_id != "source" && p.paper_id != "future"));
        assert_eq!(out.raw_count, 12);
    }

    #[test]
    fn all_future_gives_empty() {
        let (gw, _) = gateway((0..5).map(|i| paper(&format!("p{i}"), 2020)).collect());
        assert!(gw.search(&query("q"), "s", src_date(), 10).unwrap().results.is_empty());
    }

    #[test]
    fn short_list_passes_through_in_order() {
        let papers: Vec<_> = ["c", "a", "b"].iter().map(|id| paper(id, 2000)).collect();
        let (gw, _) = gateway(papers.clone());
        assert_eq!(gw.search(&query("q"), "s", src_date(), 10).unwrap().results, papers);
    }

    #[test]
    fn same_day_is_kept() {
        let mut p = paper("same", 2015);
        p.pub_date = src_date();
        let (gw, _) = gateway(vec![p]);
        assert_eq!(gw.search(&query("q"), "s", src_date(), 10).unwrap().results.len(), 1);
    }

    #[test]
    fn paper_lookup_is_cached() {
        let (gw, counter) = gateway(vec![paper("known", 2000)]);
        assert_eq!(gw.get_paper("known").unwrap().title, "Title known");
        let before = counter.calls();
        gw.get_paper("known").unwrap();
        assert_eq!(counter.calls(), before);
        assert_eq!(gw.get_paper("zzz"), Err(GatewayError::NotFound("zzz".into())));
    }

    #[test]
    fn missing_locator_is_missing_fulltext() {
        let (gw, _) = gateway(vec![paper("known", 2000)]);
        assert!(matches!(gw.get_fulltext_document("known"), Err(GatewayError::MissingFullText { .. })));
        assert!(matches!(gw.get_fulltext_document("unknown"), Err(GatewayError::MissingFullText { .. })));
    }

    struct Flaky {
        failures_left: AtomicUsize,
        rate_limits_left: Mutex<usize>,
    }
    impl ScholarProvider for Flaky {
        fn name(&self) -> &str {
            "flaky"
        }
        fn search(&self, _: &str, _: SortOrder, _: usize, _: usize) -> Result<Vec<PaperMeta>, ProviderError> {
            let mut rl = self.rate_limits_left.lock().unwrap();
            if *rl > 0 {
                *rl -= 1;
                return Err(ProviderError::RateLimited { retry_after: Some(Duration::from_millis(1)) });
            }
            if self.failures_left.load(Ordering::SeqCst) > 0 {
                self.failures_left.fetch_sub(1, Ordering::SeqCst);
                return Err(ProviderError::Transient("boom".into()));
            }
            Ok(vec![])
        }
        fn paper(&self, _: &str) -> Result<Option<PaperMeta>, ProviderError> {
            Err(ProviderError::Transient("down".into()))
        }
        fn document(&self, _: &str) -> Result<Option<Vec<u8>>, ProviderError> {
            Ok(None)
        }
    }

    fn flaky(failures: usize, rate_limits: usize) -> Gateway {
        let mut config = GatewayConfig::new(ProviderLocator::Recorded { dir: PathBuf::new() });
        config.requests_per_second = 10_000.0;
        config.retry_backoff = Duration::from_millis(1);
        let provider = Flaky { failures_left: AtomicUsize::new(failures), rate_limits_left: Mutex::new(rate_limits) };
        Gateway::new(Arc::new(provider), &config).unwrap()
    }

    #[test]
    fn transient_errors_retry_up_to_three_attempts() {
        assert!(flaky(2, 0).search(&query("q"), "s", src_date(), 10).is_ok());
        assert!(matches!(
            flaky(3, 0).search(&query("q"), "s", src_date(), 10),
            Err(GatewayError::ProviderFailure(_))
        ));
        assert!(matches!(flaky(0, 0).get_paper("x"), Err(GatewayError::ProviderFailure(_))));
    }

    #[test]
    fn rate_limits_are_waited_out() {
        assert!(flaky(0, 5).search(&query("q"), "s", src_date(), 10).is_ok());
    }
}
