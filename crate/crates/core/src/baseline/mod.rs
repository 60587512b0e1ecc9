//! Embedding retrieval baseline: exact nearest neighbour under cosine
//! similarity over a persisted corpus of paper embeddings.

mod embed;
mod eval;
mod store;

use thiserror::Error;

pub use embed::{EmbedInput, Embedder, HashingEmbedder, SpecterEmbedder, SPECTER_URL};
pub use eval::{evaluate_baseline, ingest_metadata, BaselineReport, BaselineResult, MetadataRecord};
pub use store::{CorpusStore, RepresentationKind, StoreEntry, ID_WIDTH, STORE_MAGIC};

/// Cosine values closer than this to the best are treated as ties.
pub const TIE_EPSILON: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("zero vector for `{0}`")]
    ZeroVector(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("duplicate paper id `{0}`")]
    DuplicateId(String),
    #[error("paper id `{0}` is empty or longer than the store's id width")]
    BadId(String),
    #[error("corrupt store: {0}")]
    CorruptStore(String),
    #[error("embedding service: {0}")]
    Embedding(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path} line {line}: {message}")]
    Parse { path: String, line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    /// Paper id, or a query tag such as an instance id.
    pub tag: String,
    pub values: Vec<f32>,
}

impl EmbeddingVector {
    pub fn new(tag: impl Into<String>, values: Vec<f32>) -> Self {
        Self { tag: tag.into(), values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.values)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }
}

pub(crate) fn norm(values: &[f32]) -> f64 {
    values.iter().map(|v| f64::from(*v) * f64::from(*v)).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, y)| f64::from(*x) * f64::from(*y)).sum()
}

pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, BaselineError> {
    if a.dim() != b.dim() {
        return Err(BaselineError::DimensionMismatch { left: a.dim(), right: b.dim() });
    }
    for v in [a, b] {
        if v.dim() == 0 || v.is_zero() {
            return Err(BaselineError::ZeroVector(v.tag.clone()));
        }
    }
    Ok((dot(&a.values, &b.values) / (a.norm() * b.norm())).clamp(-1.0, 1.0))
}

/// Best entry of `scores`: highest similarity, and among near-ties of the
/// maximum the smallest paper id.
fn pick<'a>(scores: impl Iterator<Item = (&'a str, f64)> + Clone) -> Option<(&'a str, f64)> {
    let best = scores.clone().map(|(_, s)| s).fold(f64::NEG_INFINITY, f64::max);
    scores
        .filter(|(_, s)| *s >= best - TIE_EPSILON)
        .min_by(|(a, _), (b, _)| a.cmp(b))
}

fn scores<'a>(query: &'a [f32], qnorm: f64, entries: &'a [StoreEntry]) -> impl Iterator<Item = (&'a str, f64)> + Clone + 'a {
    entries.iter().map(move |e| (e.paper_id.as_str(), (dot(query, &e.values) / (qnorm * e.norm)).clamp(-1.0, 1.0)))
}

fn check_query(query: &EmbeddingVector, store: &CorpusStore) -> Result<f64, BaselineError> {
    if store.is_empty() {
        return Err(BaselineError::EmptyCorpus);
    }
    if query.dim() != store.dim() {
        return Err(BaselineError::DimensionMismatch { left: query.dim(), right: store.dim() });
    }
    if query.is_zero() {
        return Err(BaselineError::ZeroVector(query.tag.clone()));
    }
    Ok(query.norm())
}

/// Exhaustive scan for the most similar corpus entry.
pub fn knn_top1(query: &EmbeddingVector, store: &CorpusStore) -> Result<(String, f64), BaselineError> {
    let qnorm = check_query(query, store)?;
    let (id, sim) = pick(scores(&query.values, qnorm, store.entries())).expect("non-empty corpus");
    Ok((id.to_string(), sim))
}

/// `knn_top1` with the scan split across `workers` threads. The result does
/// not depend on the split.
pub fn knn_top1_partitioned(
    query: &EmbeddingVector,
    store: &CorpusStore,
    workers: usize,
) -> Result<(String, f64), BaselineError> {
    let qnorm = check_query(query, store)?;
    let entries = store.entries();
    let chunk = entries.len().div_ceil(workers.max(1));
    let maxima: Vec<f64> = std::thread::scope(|scope| {
        let handles: Vec<_> = entries
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || scores(&query.values, qnorm, part).map(|(_, s)| s).fold(f64::NEG_INFINITY, f64::max))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("scan worker panicked")).collect()
    });
    let best = maxima.into_iter().fold(f64::NEG_INFINITY, f64::max);
    let winners: Vec<(String, f64)> = std::thread::scope(|scope| {
        let handles: Vec<_> = entries
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    scores(&query.values, qnorm, part)
                        .filter(|(_, s)| *s >= best - TIE_EPSILON)
                        .min_by(|(a, _), (b, _)| a.cmp(b))
                        .map(|(id, s)| (id.to_string(), s))
                })
            })
            .collect();
        handles.into_iter().filter_map(|h| h.join().expect("scan worker panicked")).collect()
    });
    Ok(winners.into_iter().min_by(|(a, _), (b, _)| a.cmp(b)).expect("non-empty corpus"))
}


#[cfg(test)]
mod tests {
    use super::*;

    fn v(values: &[f32]) -> EmbeddingVector {
        EmbeddingVector::new("q", values.to_vec())
    }

    fn store(entries: &[(&str, &[f32])]) -> CorpusStore {
        let mut s = CorpusStore::new(entries[0].1.len());
        for (id, values) in entries {
            s.insert(id, RepresentationKind::TitleOnly, values.to_vec()).unwrap();
        }
        s
    }

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine_similarity(&v(&[1.0, 0.0]), &v(&[1.0, 0.0])).unwrap(), 1.0);
        assert_eq!(cosine_similarity(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(), 0.0);
        assert!((cosine_similarity(&v(&[1.0, 1.0]), &v(&[2.0, 2.0])).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(cosine_similarity(&v(&[1.0]), &v(&[1.0, 0.0])), Err(BaselineError::DimensionMismatch { .. })));
        assert!(matches!(cosine_similarity(&v(&[0.0, 0.0]), &v(&[1.0, 0.0])), Err(BaselineError::ZeroVector(_))));
    }

    #[test]
    fn knn_examples() {
        let s = store(&[("a", &[1.0, 0.0]), ("b", &[0.0, 1.0])]);
        assert_eq!(knn_top1(&v(&[1.0, 0.0]), &s).unwrap(), ("a".to_string(), 1.0));
        let s = store(&[("b", &[1.0, 0.0]), ("a", &[2.0, 2.0])]);
        assert_eq!(knn_top1(&v(&[1.0, 1.0]), &s).unwrap().0, "a");
        assert!(matches!(knn_top1(&v(&[1.0, 1.0]), &CorpusStore::new(2)), Err(BaselineError::EmptyCorpus)));
    }

    #[test]
    fn ties_go_to_smallest_id() {
        let s = store(&[("z", &[1.0, 0.0]), ("m", &[3.0, 0.0]), ("q", &[0.0, 1.0])]);
        assert_eq!(knn_top1(&v(&[1.0, 0.0]), &s).unwrap().0, "m");
        assert_eq!(knn_top1_partitioned(&v(&[1.0, 0.0]), &s, 3).unwrap().0, "m");
    }
}
