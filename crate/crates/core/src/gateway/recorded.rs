//! Offline provider backed by a fixture directory:
//!
//! - `papers.jsonl`: one paper record per line;
//! - `searches.jsonl` (optional): `{"query", "sort", "results": [ids]}` lines
//!   replayed verbatim for matching queries;
//! - any other file referenced by a paper's `fulltext_locator`, as a path
//!   relative to the directory (conventionally `documents/<id>.pdf`).
//!
//! Queries without a recorded result list are answered by a deterministic
//! term-overlap ranking over `papers.jsonl`.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::provider::{ProviderError, ScholarProvider};
use super::{normalize_query, SortOrder};
use crate::domain::{normalize_title, PaperMeta};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordedSearch {
    pub query: String,
    pub sort: SortOrder,
    pub results: Vec<String>,
}

#[derive(Debug, Error)]
pub enum RecordedError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{file} line {line}: {message}")]
    Line { file: String, line: usize, message: String },
}

pub struct RecordedProvider {
    dir: PathBuf,
    papers: Vec<PaperMeta>,
    by_id: HashMap<String, usize>,
    /// Normalized (title, abstract) terms per paper, for lexical ranking.
    terms: Vec<(BTreeSet<String>, BTreeSet<String>)>,
    searches: HashMap<(String, SortOrder), Vec<String>>,
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, RecordedError> {
    let text = fs::read_to_string(path)
        .map_err(|source| RecordedError::Io { path: path.display().to_string(), source })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| RecordedError::Line {
                file: path.display().to_string(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

impl RecordedProvider {
    pub fn open(dir: &Path) -> Result<Self, RecordedError> {
        let papers: Vec<PaperMeta> = read_jsonl(&dir.join("papers.jsonl"))?;
        let searches_path = dir.join("searches.jsonl");
        let searches: Vec<RecordedSearch> =
            if searches_path.exists() { read_jsonl(&searches_path)? } else { Vec::new() };
        Ok(Self::from_parts(dir.to_path_buf(), papers, searches))
    }

    pub fn from_parts(dir: PathBuf, papers: Vec<PaperMeta>, searches: Vec<RecordedSearch>) -> Self {
        let by_id = papers.iter().enumerate().map(|(i, p)| (p.paper_id.clone(), i)).collect();
        let searches = searches
            .into_iter()
            .map(|s| ((normalize_query(&s.query), s.sort), s.results))
            .collect();
        let words = |s: &str| -> BTreeSet<String> { normalize_title(s).split(' ').map(str::to_string).collect() };
        let terms = papers.iter().map(|p| (words(&p.title), words(&p.r#abstract))).collect();
        Self { dir, papers, by_id, terms, searches }
    }

    /// Writes a fixture directory that `open` reads back.
    pub fn write_dir(
        dir: &Path,
        papers: &[PaperMeta],
        searches: &[RecordedSearch],
        documents: &[(String, Vec<u8>)],
    ) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("papers.jsonl"), jsonl(papers))?;
        if !searches.is_empty() {
            fs::write(dir.join("searches.jsonl"), jsonl(searches))?;
        }
        for (locator, bytes) in documents {
            let path = dir.join(locator);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(path, bytes)?;
        }
        Ok(())
    }

    fn rank(&self, query: &str, sort: SortOrder) -> Vec<&PaperMeta> {
        let terms: BTreeSet<String> =
            normalize_title(query).split(' ').filter(|t| !t.is_empty()).map(str::to_string).collect();
        let mut scored: Vec<(usize, &PaperMeta)> = self
            .papers
            .iter()
            .zip(&self.terms)
            .filter_map(|(p, (title, abs))| {
                let score: usize = terms
                    .iter()
                    .map(|t| 2 * usize::from(title.contains(t)) + usize::from(abs.contains(t)))
                    .sum();
                (score > 0).then_some((score, p))
            })
            .collect();
        match sort {
            SortOrder::Relevance => scored.sort_by(|(sa, a), (sb, b)| {
                sb.cmp(sa)
                    .then(b.citation_count.cmp(&a.citation_count))
                    .then(a.paper_id.cmp(&b.paper_id))
            }),
            SortOrder::CitationCount => scored.sort_by(|(sa, a), (sb, b)| {
                b.citation_count
                    .cmp(&a.citation_count)
                    .then(sb.cmp(sa))
                    .then(a.paper_id.cmp(&b.paper_id))
            }),
        }
        scored.into_iter().map(|(_, p)| p).collect()
    }
}

fn jsonl<T: Serialize>(items: &[T]) -> String {
    items
        .iter()
        .map(|item| serde_json::to_string(item).expect("fixture record serializes") + "\n")
        .collect()
}

fn is_relative_inside(locator: &str) -> bool {
    let path = Path::new(locator);
    !locator.is_empty()
        && path.components().all(|c| matches!(c, Component::Normal(_) | Component::CurDir))
}

impl ScholarProvider for RecordedProvider {
    fn name(&self) -> &str {
        "recorded"
    }

    fn search(
        &self,
        query: &str,
        sort: SortOrder,
        offset: usize,
        limit: usize,
    ) -> Result<Vec<PaperMeta>, ProviderError> {
        let ranked: Vec<&PaperMeta> = match self.searches.get(&(normalize_query(query), sort)) {
            Some(ids) => ids.iter().filter_map(|id| self.by_id.get(id).map(|&i| &self.papers[i])).collect(),
            None => self.rank(query, sort),
        };
        Ok(ranked.into_iter().skip(offset).take(limit).cloned().collect())
    }

    fn paper(&self, paper_id: &str) -> Result<Option<PaperMeta>, ProviderError> {
        Ok(self.by_id.get(paper_id).map(|&i| self.papers[i].clone()))
    }

    fn document(&self, locator: &str) -> Result<Option<Vec<u8>>, ProviderError> {
        if !is_relative_inside(locator) {
            return Ok(None);
        }
        match fs::read(self.dir.join(locator)) {
            Ok(bytes) => Ok(Some(bytes)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(ProviderError::Permanent(e.to_string())),
        }
    }
}
