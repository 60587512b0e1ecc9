//! Seeded synthetic benchmarks: a paper index with full texts, instances
//! whose targets live in it, and scripted model behaviour over them.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::pdf::{build_pdf, PdfPage};
use crate::agent::conversation_key;
use crate::backend::{render_action, ScriptEntry};
use crate::domain::{Action, BenchmarkInstance, CommandClass, PaperDate, PaperMeta, RunConfig, TechnicalErrorClass};
use crate::gateway::{RecordedProvider, RecordedSearch};
use crate::harness::write_dataset;

const WORDS: [&str; 40] = [
    "graph", "neural", "attention", "sparse", "kernel", "bayesian", "contrastive", "diffusion", "retrieval",
    "protein", "molecular", "robust", "adversarial", "federated", "causal", "variational", "transformer",
    "reinforcement", "policy", "language", "vision", "segmentation", "detection", "compression", "pruning",
    "quantization", "optimization", "convex", "stochastic", "gradient", "memory", "recurrent", "spectral",
    "embedding", "clustering", "manifold", "tabular", "audio", "speech", "temporal",
];

pub struct World {
    pub instances: Vec<BenchmarkInstance>,
    pub papers: Vec<PaperMeta>,
    pub searches: Vec<RecordedSearch>,
    pub documents: Vec<(String, Vec<u8>)>,
}

fn title(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(3..7);
    let words: Vec<&str> = WORDS.choose_multiple(rng, n).copied().collect();
    let mut t = words.join(" ");
    t[..1].make_ascii_uppercase();
    t
}

fn paper_id(k: usize) -> String {
    format!("{k:040x}")
}

/// `n` instances over an index of about `5n + 20` papers. Roughly a tenth of
/// the papers post-date every source, some lack full text, one document is
/// corrupt.
pub fn world(seed: u64, n: usize) -> World {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = 5 * n + 20;
    let mut papers = Vec::with_capacity(count);
    let mut documents = Vec::new();
    for k in 0..count {
        let id = paper_id(k + 1);
        let year = if rng.gen_bool(0.1) { rng.gen_range(2026..2030) } else { rng.gen_range(1995..2024) };
        let t = title(&mut rng);
        let locator = match rng.gen_range(0..10) {
            0 | 1 => None,
            2 if k % 7 == 0 => {
                let loc = format!("documents/{id}.pdf");
                documents.push((loc.clone(), b"%PDF-1.5 truncated".to_vec()));
                Some(loc)
            }
            _ => {
                let loc = format!("documents/{id}.pdf");
                let body = format!("{t}. This paper studies {} methods in detail.", t.to_lowercase());
                documents.push((loc.clone(), build_pdf(&[PdfPage::from_paragraph(&body, 8)])));
                Some(loc)
            }
        };
        papers.push(PaperMeta {
            paper_id: id,
            r#abstract: format!("We study {}.", t.to_lowercase()),
            title: t,
            citation_count: rng.gen_range(0..5000),
            pub_date: PaperDate::new(year, rng.gen_range(1..13), rng.gen_range(1..29)).expect("valid date"),
            fulltext_locator: locator,
        });
    }
    let mut instances = Vec::with_capacity(n);
    for i in 0..n {
        let target = loop {
            let p = &papers[rng.gen_range(0..count)];
            if p.pub_date.year() < 2024 {
                break p.clone();
            }
        };
        let source = loop {
            let p = &papers[rng.gen_range(0..count)];
            if p.pub_date.year() >= target.pub_date.year() && p.paper_id != target.paper_id && p.pub_date.year() < 2026 {
                break p.clone();
            }
        };
        instances.push(BenchmarkInstance {
            instance_id: format!("inst-{i:03}"),
            excerpt: format!("Prior work on {} [CITATION] motivates our approach.", target.title.to_lowercase()),
            target_title: target.title.clone(),
            target_paper_id: Some(target.paper_id.clone()),
            source_paper_id: source.paper_id.clone(),
            source_date: source.pub_date,
            target_year: target.pub_date.year(),
            tags: vec![],
        });
    }
    World { instances, papers, searches: Vec::new(), documents }
}

impl World {
    pub fn write_provider_dir(&self, dir: &Path) -> std::io::Result<()> {
        RecordedProvider::write_dir(dir, &self.papers, &self.searches, &self.documents)
    }

    fn title_of(&self, id: &str) -> String {
        self.papers.iter().find(|p| p.paper_id == id).map(|p| p.title.clone()).unwrap_or_default()
    }

    /// A plausible, mostly successful run for every (config, instance),
    /// keyed by conversation.
    pub fn behaviour_script(&self, configs: &[RunConfig], seed: u64) -> Vec<ScriptEntry> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for config in configs {
            for instance in &self.instances {
                let key = conversation_key(&config.config_id, &instance.instance_id);
                let target = instance.target_paper_id.clone().expect("world targets have ids");
                let wrong = self.papers[rng.gen_range(0..self.papers.len())].paper_id.clone();
                let right = rng.gen_bool(0.6);
                let pick = if right { target.clone() } else { wrong.clone() };
                let mut turns: Vec<String> = Vec::new();
                match config.command_class {
                    CommandClass::NoCommands => {
                        let t = if right { instance.target_title.clone() } else { self.title_of(&wrong) };
                        turns.push(format!("I believe the cited work is:\n{t}"));
                    }
                    class => {
                        if rng.gen_bool(0.1) {
                            turns.push("Let me think about this before acting.".into());
                        }
                        let query = instance.target_title.to_lowercase();
                        turns.push(render_action("Search by topic.", &Action::SearchRelevance { query }));
                        if class == CommandClass::SearchAndRead {
                            turns.push(render_action("Check the paper.", &Action::Read { paper_id: pick.clone() }));
                        }
                        if rng.gen_bool(0.05) {
                            out.push(ScriptEntry::failure(&key, TechnicalErrorClass::ContentFilter));
                            continue;
                        }
                        turns.push(render_action("Matches the excerpt.", &Action::Select { paper_id: pick }));
                    }
                }
                out.extend(turns.into_iter().map(|t| ScriptEntry::reply(&key, t)));
            }
        }
        out
    }
}

/// Random scripted behaviour for one run: arbitrary commands, malformed
/// replies, illegal commands and injected provider errors, of random length.
pub fn random_script(rng: &mut impl Rng, class: CommandClass, ids: &[String]) -> Vec<ScriptEntry> {
    let len = rng.gen_range(1..30);
    let select_at = if rng.gen_bool(0.4) { None } else { Some(rng.gen_range(0..len)) };
    let mut out = Vec::with_capacity(len);
    for k in 0..len {
        let id = ids[rng.gen_range(0..ids.len())].clone();
        let query = WORDS.choose_multiple(rng, 2).copied().collect::<Vec<_>>().join(" ");
        if class == CommandClass::NoCommands {
            out.push(ScriptEntry::reply("*", format!("Answer:\n{}", WORDS.choose(rng).expect("non-empty"))));
            continue;
        }
        if Some(k) == select_at {
            out.push(ScriptEntry::reply("*", render_action("done", &Action::Select { paper_id: id })));
            continue;
        }
        let entry = match rng.gen_range(0..20) {
            0 => ScriptEntry::reply("*", "not json at all"),
            1 => ScriptEntry::reply("*", r#"{"reason": "x", "action": {"name": "browse"}}"#),
            2 => ScriptEntry::failure("*", *[
                TechnicalErrorClass::ContextLengthExceeded,
                TechnicalErrorClass::ContentFilter,
                TechnicalErrorClass::ProviderFailure,
            ]
            .choose(rng)
            .expect("non-empty")),
            3..=6 => ScriptEntry::reply("*", render_action("read", &Action::Read { paper_id: id })),
            7..=11 => ScriptEntry::reply("*", render_action("cites", &Action::SearchCitations { query })),
            _ => ScriptEntry::reply("*", render_action("look", &Action::SearchRelevance { query })),
        };
        out.push(entry);
    }
    out
}

/// Paths of a fixture written by `write_matrix_fixture`.
pub struct MatrixFixture {
    pub dataset: PathBuf,
    pub provider_dir: PathBuf,
    pub script: PathBuf,
    pub configs: Vec<RunConfig>,
}

pub const FIXTURE_BACKEND: &str = "scripted";

/// Ten instances, the six command-class x demo cells, a recorded index and
/// a behaviour script, written under `dir`.
pub fn write_matrix_fixture(dir: &Path, seed: u64) -> std::io::Result<MatrixFixture> {
    let w = world(seed, 10);
    let configs: Vec<RunConfig> = CommandClass::ALL
        .iter()
        .flat_map(|c| {
            [false, true].map(|demo| RunConfig::new(RunConfig::cell_id(FIXTURE_BACKEND, *c, demo), FIXTURE_BACKEND, *c, demo))
        })
        .collect();
    std::fs::create_dir_all(dir)?;
    let dataset = dir.join("dataset.jsonl");
    write_dataset(&dataset, &w.instances)?;
    let provider_dir = dir.join("index");
    w.write_provider_dir(&provider_dir)?;
    let script = dir.join("script.jsonl");
    let lines: String = w
        .behaviour_script(&configs, seed)
        .iter()
        .map(|e| serde_json::to_string(e).expect("entry serializes") + "\n")
        .collect();
    std::fs::write(&script, lines)?;
    Ok(MatrixFixture { dataset, provider_dir, script, configs })
}
