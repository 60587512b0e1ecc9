//! Python bindings. Structured values cross the boundary as plain dicts and
//! lists with the same field names as the JSON files the toolkit reads and
//! writes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;
use serde::de::DeserializeOwned;
use serde::Serialize;

use citefind::agent::ClockKind;
use citefind::backend::{parse_action as core_parse_action, Backend, ScriptedBackend};
use citefind::baseline::{
    cosine_similarity as core_cosine, knn_top1, CorpusStore as CoreStore, EmbeddingVector, HashingEmbedder as CoreHashing,
    RepresentationKind,
};
use citefind::domain::{BenchmarkInstance, CommandClass, Outcome, RawInstance, RunConfig};
use citefind::gateway::{Gateway, GatewayConfig};
use citefind::harness::{self, RunMatrix};
use citefind::reader::{budget_text as core_budget, extract_text, ExtractedText};
use citefind::tokens::WordTokenizer;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(runtime_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py<T: DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(value_err)
}

fn command_class(name: &str) -> PyResult<CommandClass> {
    name.parse().map_err(value_err)
}

/// Lower-cased, punctuation-free, whitespace-collapsed title.
#[pyfunction]
fn normalize_title(title: &str) -> String {
    citefind::normalize_title(title)
}

/// Checks a raw instance record and returns it normalized; raises ValueError.
#[pyfunction]
fn validate_instance<'py>(record: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
    let raw: RawInstance = from_py(record)?;
    let instance = citefind::validate_instance(raw).map_err(value_err)?;
    to_py(record.py(), &instance)
}

#[pyfunction]
fn load_dataset(py: Python<'_>, path: PathBuf) -> PyResult<Bound<'_, PyAny>> {
    let instances = harness::load_dataset(&path).map_err(value_err)?;
    to_py(py, &instances)
}

/// Parses one model reply into (reason, action dict) under a command class
/// (`none`, `search_only` or `search_read`).
#[pyfunction]
#[pyo3(signature = (reply, commands = "search_read"))]
fn parse_action<'py>(py: Python<'py>, reply: &str, commands: &str) -> PyResult<(String, Bound<'py, PyAny>)> {
    let (reason, action) = core_parse_action(reply, command_class(commands)?).map_err(value_err)?;
    Ok((reason, to_py(py, &action)?))
}

/// Scores an outcome dict (`{"kind": "selected", "paper_id": ...}` etc.)
/// against an instance dict.
#[pyfunction]
#[pyo3(signature = (outcome, instance, config_id = "python", resolved_title = None))]
fn score_selection<'py>(
    outcome: &Bound<'py, PyAny>,
    instance: &Bound<'py, PyAny>,
    config_id: &str,
    resolved_title: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    let py = outcome.py();
    let outcome: Outcome = from_py(outcome)?;
    let instance: BenchmarkInstance = from_py(instance)?;
    let record = harness::score_selection(&outcome, &instance, config_id, resolved_title);
    to_py(py, &record)
}

/// True when `target` sits in a citation group with at least two keys.
/// Raises ValueError when the text has no recognizable citation markup.
#[pyfunction]
fn detect_multicite_ambiguity(text: &str, target: &str) -> PyResult<bool> {
    harness::detect_multicite_ambiguity(text, target).map_err(value_err)
}

/// Corpus statistics over (text, target) pairs.
#[pyfunction]
fn ambiguity_stats(py: Python<'_>, lines: Vec<(String, String)>) -> PyResult<Bound<'_, PyAny>> {
    let stats = harness::ambiguity_stats(lines.iter().map(|(t, k)| (t.as_str(), k.as_str())));
    let mut out = BTreeMap::new();
    out.insert("recognized", serde_json::json!(stats.recognized));
    out.insert("flagged", serde_json::json!(stats.flagged));
    out.insert("unrecognized", serde_json::json!(stats.unrecognized));
    out.insert("flagged_pct", serde_json::json!(stats.flagged_pct()));
    to_py(py, &out)
}

/// Text layer of a PDF with figures left out, as a dict with `text`,
/// `char_count`, `truncated` and `dropped_regions`.
#[pyfunction]
fn extract_pdf_text<'py>(data: &Bound<'py, PyBytes>) -> PyResult<Bound<'py, PyAny>> {
    let extracted = extract_text(data.as_bytes()).map_err(value_err)?;
    to_py(data.py(), &extracted)
}

/// Fits text into `budget` whitespace tokens, keeping the head and the tail.
/// Returns (text, truncated).
#[pyfunction]
fn budget_text(text: &str, budget: usize) -> PyResult<(String, bool)> {
    if budget == 0 {
        return Err(value_err("budget must be positive"));
    }
    let out = core_budget(ExtractedText::new("python", text.to_string(), 0), budget, &WordTokenizer);
    Ok((out.text, out.truncated))
}

#[pyfunction]
fn cosine_similarity(a: Vec<f32>, b: Vec<f32>) -> PyResult<f64> {
    core_cosine(&EmbeddingVector::new("a", a), &EmbeddingVector::new("b", b)).map_err(value_err)
}

/// Fixed-dimension embedding store with exact cosine top-1 search.
#[pyclass(module = "citefind")]
struct CorpusStore {
    inner: CoreStore,
}

#[pymethods]
impl CorpusStore {
    #[new]
    fn new(dim: usize) -> PyResult<Self> {
        if dim == 0 {
            return Err(value_err("dim must be positive"));
        }
        Ok(Self { inner: CoreStore::new(dim) })
    }

    #[pyo3(signature = (paper_id, values, title_only = false))]
    fn insert(&mut self, paper_id: &str, values: Vec<f32>, title_only: bool) -> PyResult<()> {
        let kind = if title_only { RepresentationKind::TitleOnly } else { RepresentationKind::TitleAndAbstract };
        self.inner.insert(paper_id, kind, values).map_err(value_err)
    }

    /// (paper_id, similarity) of the most similar entry; ties go to the smallest id.
    fn top1(&self, query: Vec<f32>) -> PyResult<(String, f64)> {
        knn_top1(&EmbeddingVector::new("query", query), &self.inner).map_err(value_err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn ids(&self) -> Vec<String> {
        self.inner.entries().iter().map(|e| e.paper_id.clone()).collect()
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(runtime_err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: CoreStore::load(&path).map_err(value_err)? })
    }
}

/// Deterministic feature-hashing embedder (no network).
#[pyclass(module = "citefind", frozen)]
struct HashingEmbedder {
    inner: CoreHashing,
}

#[pymethods]
impl HashingEmbedder {
    #[new]
    fn new(dim: usize) -> PyResult<Self> {
        if dim == 0 {
            return Err(value_err("dim must be positive"));
        }
        Ok(Self { inner: CoreHashing::new(dim) })
    }

    fn embed(&self, text: &str) -> Vec<f32> {
        self.inner.embed_text(text)
    }
}

/// Runs a scripted-backend matrix against a recorded index and returns the
/// markdown report. Trajectories and report files go under `out`.
#[pyfunction]
#[pyo3(signature = (dataset, script, index, out, commands = vec!["search_read".to_string()], demo = vec![true], jobs = 4, cutoff_year = harness::DEFAULT_CUTOFF_YEAR))]
#[allow(clippy::too_many_arguments)]
fn run_scripted(
    py: Python<'_>,
    dataset: PathBuf,
    script: PathBuf,
    index: PathBuf,
    out: PathBuf,
    commands: Vec<String>,
    demo: Vec<bool>,
    jobs: usize,
    cutoff_year: i32,
) -> PyResult<String> {
    let classes = commands.iter().map(|c| command_class(c)).collect::<PyResult<Vec<_>>>()?;
    let configs = RunMatrix::grid("scripted", &classes, &demo);
    let matrix = RunMatrix { configs, dataset: dataset.clone(), out_dir: out, concurrency_limit: jobs };
    matrix.validate().map_err(value_err)?;
    py.detach(|| {
        let instances = harness::load_dataset(&dataset).map_err(|e| e.to_string())?;
        let backend: Arc<dyn Backend> =
            Arc::new(ScriptedBackend::from_file("scripted", &script).map_err(|e| e.to_string())?);
        let backends = BTreeMap::from([("scripted".to_string(), backend)]);
        let gateway = Gateway::from_config(&GatewayConfig::recorded(&index)).map_err(|e| e.to_string())?;
        let result = harness::run_matrix(&matrix, &instances, &backends, Some(&gateway), ClockKind::Logical, cutoff_year)
            .map_err(|e| e.to_string())?;
        Ok::<_, String>(harness::render_markdown(&result.report))
    })
    .map_err(runtime_err)
}

/// Rebuilds (csv, markdown) report text from trajectory logs, offline.
#[pyfunction]
#[pyo3(signature = (trajectories, cutoff_year = harness::DEFAULT_CUTOFF_YEAR))]
fn replay(trajectories: PathBuf, cutoff_year: i32) -> PyResult<(String, String)> {
    let (_, report) = harness::replay(&trajectories, cutoff_year, None).map_err(runtime_err)?;
    Ok((harness::render_csv(&report), harness::render_markdown(&report)))
}

/// Memorization filter with a scripted backend. Returns per-candidate verdicts
/// plus the kept and removed instance ids.
#[pyfunction]
#[pyo3(signature = (dataset, script, repeats = harness::DEFAULT_REPEATS))]
fn memorization_filter(py: Python<'_>, dataset: PathBuf, script: PathBuf, repeats: u32) -> PyResult<Bound<'_, PyAny>> {
    if repeats == 0 {
        return Err(value_err("repeats must be at least 1"));
    }
    let candidates = harness::load_dataset(&dataset).map_err(value_err)?;
    let backend = ScriptedBackend::from_file("scripted", &script).map_err(value_err)?;
    let outcome = harness::memorization_filter(&candidates, &backend, repeats);
    let ids = |v: &[BenchmarkInstance]| v.iter().map(|i| i.instance_id.clone()).collect::<Vec<_>>();
    let out = serde_json::json!({
        "kept": ids(&outcome.kept),
        "removed": ids(&outcome.removed),
        "verdicts": outcome.verdicts,
    });
    to_py(py, &out)
}

/// Writes the synthetic ten-instance fixture (dataset, script, recorded index)
/// used by the test suites and returns its paths.
#[pyfunction]
#[pyo3(signature = (directory, seed = 0))]
fn write_fixture(py: Python<'_>, directory: PathBuf, seed: u64) -> PyResult<Bound<'_, PyAny>> {
    let fx = citefind::testkit::world::write_matrix_fixture(&directory, seed).map_err(runtime_err)?;
    let path = |p: &Path| p.display().to_string();
    let out = serde_json::json!({
        "dataset": path(&fx.dataset),
        "script": path(&fx.script),
        "index": path(&fx.provider_dir),
        "configs": fx.configs.iter().map(|c: &RunConfig| c.config_id.clone()).collect::<Vec<_>>(),
    });
    to_py(py, &out)
}

#[pymodule]
#[pyo3(name = "citefind")]
fn citefind_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(normalize_title, m)?)?;
    m.add_function(wrap_pyfunction!(validate_instance, m)?)?;
    m.add_function(wrap_pyfunction!(load_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(parse_action, m)?)?;
    m.add_function(wrap_pyfunction!(score_selection, m)?)?;
    m.add_function(wrap_pyfunction!(detect_multicite_ambiguity, m)?)?;
    m.add_function(wrap_pyfunction!(ambiguity_stats, m)?)?;
    m.add_function(wrap_pyfunction!(extract_pdf_text, m)?)?;
    m.add_function(wrap_pyfunction!(budget_text, m)?)?;
    m.add_function(wrap_pyfunction!(cosine_similarity, m)?)?;
    m.add_function(wrap_pyfunction!(run_scripted, m)?)?;
    m.add_function(wrap_pyfunction!(replay, m)?)?;
    m.add_function(wrap_pyfunction!(memorization_filter, m)?)?;
    m.add_function(wrap_pyfunction!(write_fixture, m)?)?;
    m.add_class::<CorpusStore>()?;
    m.add_class::<HashingEmbedder>()?;
    Ok(())
}
