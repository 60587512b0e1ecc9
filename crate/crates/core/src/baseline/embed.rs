use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::BaselineError;
use crate::domain::normalize_title;

/// Public SPECTER inference endpoint; accepts batches of up to 16 papers.
pub const SPECTER_URL: &str = "https://model-apis.semanticscholar.org/specter/v1/invoke";
const SPECTER_BATCH: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbedInput {
    pub paper_id: String,
    pub title: String,
    #[serde(rename = "abstract", default)]
    pub abstract_text: String,
}

impl EmbedInput {
    pub fn new(id: impl Into<String>, title: impl Into<String>, abstract_text: impl Into<String>) -> Self {
        Self { paper_id: id.into(), title: title.into(), abstract_text: abstract_text.into() }
    }
}

pub trait Embedder: Send + Sync {
    fn dim(&self) -> usize;
    /// Largest batch `embed` accepts.
    fn batch_size(&self) -> usize;
    fn embed(&self, inputs: &[EmbedInput]) -> Result<Vec<Vec<f32>>, BaselineError>;
}

/// Signed feature hashing of unigrams and bigrams. Deterministic and
/// offline; similar wording gives similar vectors.
#[derive(Debug, Clone, Copy)]
pub struct HashingEmbedder {
    dim: usize,
}

impl HashingEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self { dim }
    }

    fn fnv1a(bytes: &[u8]) -> u64 {
        bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(*b)).wrapping_mul(0x0100_0000_01b3))
    }

    pub fn embed_text(&self, text: &str) -> Vec<f32> {
        let normalized = normalize_title(text);
        let words: Vec<&str> = normalized.split(' ').filter(|w| !w.is_empty()).collect();
        let mut out = vec![0f32; self.dim];
        let mut add = |feature: &str, weight: f32| {
            let h = Self::fnv1a(feature.as_bytes());
            let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
            out[(h % self.dim as u64) as usize] += sign * weight;
        };
        for w in &words {
            add(w, 1.0);
        }
        for pair in words.windows(2) {
            add(&format!("{} {}", pair[0], pair[1]), 0.5);
        }
        out
    }
}

impl Embedder for HashingEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn batch_size(&self) -> usize {
        usize::MAX
    }

    fn embed(&self, inputs: &[EmbedInput]) -> Result<Vec<Vec<f32>>, BaselineError> {
        Ok(inputs
            .iter()
            .map(|i| self.embed_text(&format!("{} {}", i.title, i.abstract_text)))
            .collect())
    }
}

/// Client for a SPECTER-style inference service:
/// `POST {"papers": [...]}` answered by `{"preds": [{"paper_id", "embedding"}]}`.
pub struct SpecterEmbedder {
    client: reqwest::blocking::Client,
    url: String,
    dim: usize,
}

#[derive(Serialize)]
struct SpecterRequest<'a> {
    papers: &'a [EmbedInput],
}

#[derive(Deserialize)]
struct SpecterResponse {
    preds: Vec<SpecterPred>,
}

#[derive(Deserialize)]
struct SpecterPred {
    paper_id: String,
    embedding: Vec<f32>,
}

impl SpecterEmbedder {
    pub fn new(url: Option<&str>, dim: usize, timeout: Duration) -> Result<Self, BaselineError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| BaselineError::Embedding(e.to_string()))?;
        Ok(Self { client, url: url.unwrap_or(SPECTER_URL).to_string(), dim })
    }
}

impl Embedder for SpecterEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn batch_size(&self) -> usize {
        SPECTER_BATCH
    }

    fn embed(&self, inputs: &[EmbedInput]) -> Result<Vec<Vec<f32>>, BaselineError> {
        let err = |e: String| BaselineError::Embedding(e);
        let response = self
            .client
            .post(&self.url)
            .json(&SpecterRequest { papers: inputs })
            .send()
            .map_err(|e| err(e.to_string()))?;
        if !response.status().is_success() {
            return Err(err(format!("HTTP {}", response.status())));
        }
        let body: SpecterResponse = response.json().map_err(|e| err(e.to_string()))?;
        inputs
            .iter()
            .map(|input| {
                let pred = body
                    .preds
                    .iter()
                    .find(|p| p.paper_id == input.paper_id)
                    .ok_or_else(|| err(format!("no embedding returned for `{}`", input.paper_id)))?;
                if pred.embedding.len() != self.dim {
                    return Err(BaselineError::DimensionMismatch { left: pred.embedding.len(), right: self.dim });
                }
                Ok(pred.embedding.clone())
            })
            .collect()
    }
}
