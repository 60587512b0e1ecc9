//! Live provider for the Semantic Scholar Graph API.

use std::time::Duration;

use serde::Deserialize;

use super::provider::{ProviderError, ScholarProvider};
use super::SortOrder;
use crate::domain::{PaperDate, PaperMeta};

pub const DEFAULT_BASE_URL: &str = "https://api.semanticscholar.org/graph/v1";
pub const API_KEY_ENV: &str = "SEMANTIC_SCHOLAR_API_KEY";
const FIELDS: &str = "paperId,title,abstract,citationCount,publicationDate,year,openAccessPdf";

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct ApiPaper {
    paper_id: Option<String>,
    title: Option<String>,
    r#abstract: Option<String>,
    citation_count: Option<u64>,
    publication_date: Option<String>,
    year: Option<i32>,
    open_access_pdf: Option<ApiPdf>,
}

#[derive(Debug, Deserialize)]
struct ApiPdf {
    url: Option<String>,
}

#[derive(Debug, Deserialize)]
struct ApiSearch {
    #[serde(default)]
    data: Vec<ApiPaper>,
}

impl ApiPaper {
    fn into_meta(self) -> Option<PaperMeta> {
        let paper_id = self.paper_id.filter(|id| !id.is_empty())?;
        let pub_date = self
            .publication_date
            .as_deref()
            .and_then(|d| d.parse::<PaperDate>().ok())
            .or_else(|| self.year.and_then(PaperDate::from_year))
            .unwrap_or_else(PaperDate::unknown);
        Some(PaperMeta {
            paper_id,
            title: self.title.unwrap_or_default(),
            r#abstract: self.r#abstract.unwrap_or_default(),
            citation_count: self.citation_count.unwrap_or(0),
            pub_date,
            fulltext_locator: self.open_access_pdf.and_then(|p| p.url).filter(|u| !u.is_empty()),
        })
    }
}

pub struct SemanticScholarProvider {
    base_url: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl SemanticScholarProvider {
    pub fn new(base_url: Option<&str>, timeout: Duration) -> Result<Self, reqwest::Error> {
        Ok(Self {
            base_url: base_url.unwrap_or(DEFAULT_BASE_URL).trim_end_matches('/').to_string(),
            api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
            client: reqwest::blocking::Client::builder().timeout(timeout).build()?,
        })
    }

    fn get(&self, url: &str, query: &[(&str, String)]) -> Result<Option<reqwest::blocking::Response>, ProviderError> {
        let mut req = self.client.get(url).query(query);
        if let Some(key) = &self.api_key {
            req = req.header("x-api-key", key);
        }
        let resp = req.send().map_err(|e| ProviderError::Transient(e.to_string()))?;
        let status = resp.status().as_u16();
        match status {
            200..=299 => Ok(Some(resp)),
            404 | 403 | 410 => Ok(None),
            429 => {
                let retry_after = resp
                    .headers()
                    .get("retry-after")
                    .and_then(|v| v.to_str().ok())
                    .and_then(|v| v.parse::<u64>().ok())
                    .map(Duration::from_secs);
                Err(ProviderError::RateLimited { retry_after })
            }
            s if s >= 500 => Err(ProviderError::Transient(format!("HTTP {s} from {url}"))),
            s => Err(ProviderError::Permanent(format!("HTTP {s} from {url}"))),
        }
    }

    fn json<T: for<'de> Deserialize<'de>>(resp: reqwest::blocking::Response) -> Result<T, ProviderError> {
        resp.json().map_err(|e| ProviderError::Transient(format!("decoding response: {e}")))
    }
}

impl ScholarProvider for SemanticScholarProvider {
    fn name(&self) -> &str {
        "semantic-scholar"
    }

    fn search(
        &self,
        query: &str,
        sort: SortOrder,
        offset: usize,
        limit: usize,
    ) -> Result<Vec<PaperMeta>, ProviderError> {
        let papers = match sort {
            SortOrder::Relevance => {
                let url = format!("{}/paper/search", self.base_url);
                let params = [
                    ("query", query.to_string()),
                    ("offset", offset.to_string()),
                    ("limit", limit.min(100).to_string()),
                    ("fields", FIELDS.to_string()),
                ];
                match self.get(&url, &params)? {
                    Some(resp) => Self::json::<ApiSearch>(resp)?.data,
                    None => Vec::new(),
                }
            }
            SortOrder::CitationCount => {
                // The bulk endpoint pages by token, not offset; one page holds up to 1000 hits.
                let url = format!("{}/paper/search/bulk", self.base_url);
                let params = [
                    ("query", query.to_string()),
                    ("sort", "citationCount:desc".to_string()),
                    ("fields", FIELDS.to_string()),
                ];
                match self.get(&url, &params)? {
                    Some(resp) => Self::json::<ApiSearch>(resp)?
                        .data
                        .into_iter()
                        .skip(offset)
                        .take(limit)
                        .collect(),
                    None => Vec::new(),
                }
            }
        };
        Ok(papers.into_iter().filter_map(ApiPaper::into_meta).collect())
    }

    fn paper(&self, paper_id: &str) -> Result<Option<PaperMeta>, ProviderError> {
        let url = format!("{}/paper/{}", self.base_url, paper_id);
        match self.get(&url, &[("fields", FIELDS.to_string())])? {
            Some(resp) => Ok(Self::json::<ApiPaper>(resp)?.into_meta()),
            None => Ok(None),
        }
    }

    fn document(&self, locator: &str) -> Result<Option<Vec<u8>>, ProviderError> {
        if !(locator.starts_with("http://") || locator.starts_with("https://")) {
            return Ok(None);
        }
        match self.get(locator, &[])? {
            Some(resp) => resp
                .bytes()
                .map(|b| Some(b.to_vec()))
                .map_err(|e| ProviderError::Transient(e.to_string())),
            None => Ok(None),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decodes_api_paper() {
        let json = r#"{"paperId": "995c", "title": "BN", "abstract": null, "citationCount": 39617,
                       "publicationDate": null, "year": 2015, "openAccessPdf": {"url": "https://x/y.pdf"}}"#;
        let meta = serde_json::from_str::<ApiPaper>(json).unwrap().into_meta().unwrap();
        assert_eq!(meta.pub_date.to_string(), "2015-01-01");
        assert_eq!(meta.r#abstract, "");
        assert_eq!(meta.fulltext_locator.as_deref(), Some("https://x/y.pdf"));
    }

    #[test]
    fn undated_papers_sort_as_unknown() {
        let json = r#"{"paperId": "x", "title": "t"}"#;
        let meta = serde_json::from_str::<ApiPaper>(json).unwrap().into_meta().unwrap();
        assert_eq!(meta.pub_date, PaperDate::unknown());
        assert_eq!(meta.fulltext_locator, None);
    }
}
