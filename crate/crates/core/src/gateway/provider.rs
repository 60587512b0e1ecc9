use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use thiserror::Error;

use super::SortOrder;
use crate::domain::PaperMeta;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProviderError {
    /// Worth retrying: timeouts, 5xx, connection resets.
    #[error("transient provider error: {0}")]
    Transient(String),
    #[error("provider error: {0}")]
    Permanent(String),
    #[error("rate limited")]
    RateLimited { retry_after: Option<Duration> },
}

/// A scholarly search backend. Pages are requested with an offset so the
/// gateway can refill after filtering.
pub trait ScholarProvider: Send + Sync {
    /// Stable name used in cache keys.
    fn name(&self) -> &str;

    fn search(
        &self,
        query: &str,
        sort: SortOrder,
        offset: usize,
        limit: usize,
    ) -> Result<Vec<PaperMeta>, ProviderError>;

    /// `Ok(None)` when the provider has no such paper.
    fn paper(&self, paper_id: &str) -> Result<Option<PaperMeta>, ProviderError>;

    /// `Ok(None)` when the locator does not resolve to a document.
    fn document(&self, locator: &str) -> Result<Option<Vec<u8>>, ProviderError>;
}

/// Wraps a provider and counts the requests that reach it.
pub struct CountingProvider {
    inner: Arc<dyn ScholarProvider>,
    calls: AtomicUsize,
}

impl CountingProvider {
    pub fn new(inner: Arc<dyn ScholarProvider>) -> Self {
        Self { inner, calls: AtomicUsize::new(0) }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    fn bump(&self) {
        self.calls.fetch_add(1, Ordering::SeqCst);
    }
}

impl ScholarProvider for CountingProvider {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn search(
        &self,
        query: &str,
        sort: SortOrder,
        offset: usize,
        limit: usize,
    ) -> Result<Vec<PaperMeta>, ProviderError> {
        self.bump();
        self.inner.search(query, sort, offset, limit)
    }

    fn paper(&self, paper_id: &str) -> Result<Option<PaperMeta>, ProviderError> {
        self.bump();
        self.inner.paper(paper_id)
    }

    fn document(&self, locator: &str) -> Result<Option<Vec<u8>>, ProviderError> {
        self.bump();
        self.inner.document(locator)
    }
}
