use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde_json::json;

use citefind::agent::ClockKind;
use citefind::backend::{Backend, BackendRegistry, ScriptedBackend};
use citefind::baseline::{
    evaluate_baseline, ingest_metadata, CorpusStore, Embedder, HashingEmbedder, RepresentationKind, SpecterEmbedder,
};
use citefind::domain::{CommandClass, PaperMeta, RunConfig};
use citefind::gateway::{Gateway, GatewayConfig, RateLimiter};
use citefind::harness::{
    ambiguity_stats, emit_report, generate_tags, load_annotations, load_dataset, memorization_filter, render_csv,
    render_markdown, replay, run_human_session, run_matrix, sample_instances, AggregateReport, AmbiguityLine,
    MatrixError, RunMatrix, TerminalSource, TRAJECTORY_DIR,
};

use crate::args::*;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or flag combinations; exit 1.
    Usage(String),
    /// Anything that fails while doing the work; exit 2.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

type CliResult = Result<(), CliError>;

fn runtime(e: impl Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn usage(e: impl Display) -> CliError {
    CliError::Usage(e.to_string())
}

pub fn dispatch(command: Command) -> CliResult {
    match command {
        Command::Run(a) => run(a),
        Command::Eval(a) => eval(a),
        Command::Baseline(a) => baseline(a),
        Command::Filter(a) => filter(a),
        Command::Ambiguity(a) => ambiguity(a),
        Command::Tags(a) => tags(a),
        Command::Human(a) => human(a),
        Command::Report(a) => report(a),
        Command::Replay(a) => replay_cmd(a),
    }
}

const SCRIPTED: &str = "scripted";

fn registry(args: &BackendArgs) -> Result<BackendRegistry, CliError> {
    match &args.registry {
        Some(path) => BackendRegistry::load(path).map_err(runtime),
        None => Ok(BackendRegistry::builtin()),
    }
}

/// Checks that every backend id can be built, without building anything.
fn check_backends(args: &BackendArgs) -> CliResult {
    let registry = registry(args)?;
    for id in &args.backends {
        if id == SCRIPTED {
            if args.script.is_none() {
                return Err(usage("`--backend scripted` needs `--script <file>`"));
            }
        } else if registry.get(id).is_err() {
            return Err(usage(format!("unknown backend `{id}`")));
        }
    }
    Ok(())
}

fn build_backends(args: &BackendArgs) -> Result<BTreeMap<String, Arc<dyn Backend>>, CliError> {
    check_backends(args)?;
    let registry = registry(args)?;
    let mut out = BTreeMap::new();
    for id in &args.backends {
        let backend: Arc<dyn Backend> = if id == SCRIPTED {
            let script = args.script.as_ref().expect("checked above");
            Arc::new(ScriptedBackend::from_file(SCRIPTED, script).map_err(runtime)?)
        } else {
            registry.build(id).map_err(runtime)?
        };
        out.insert(id.clone(), backend);
    }
    Ok(out)
}

fn single_backend(args: &BackendArgs) -> Result<Arc<dyn Backend>, CliError> {
    if args.backends.len() != 1 {
        return Err(usage("exactly one `--backend` is allowed here"));
    }
    Ok(build_backends(args)?.into_values().next().expect("one backend"))
}

fn gateway_config(args: &ProviderArgs) -> Result<GatewayConfig, CliError> {
    if !(args.requests_per_second > 0.0 && args.requests_per_second.is_finite()) {
        return Err(usage("`--requests-per-second` must be positive"));
    }
    let mut config = match args.provider {
        ProviderArg::Recorded => {
            let dir = args.index.as_ref().ok_or_else(|| usage("`--provider recorded` needs `--index <dir>`"))?;
            GatewayConfig::recorded(dir)
        }
        ProviderArg::Live => {
            let mut c = GatewayConfig::live(args.api_base.clone());
            c.requests_per_second = args.requests_per_second;
            c
        }
    };
    config.cache_dir = args.cache_dir.clone();
    Ok(config)
}

fn resolve_matrix(a: &RunArgs) -> Result<RunMatrix, CliError> {
    let mut classes = Vec::new();
    for c in &a.commands {
        if !classes.contains(c) {
            classes.push(*c);
        }
    }
    let mut configs = Vec::new();
    for backend in &a.backend.backends {
        for class in &classes {
            for demo in a.demo_values() {
                let class = (*class).into();
                let mut c = RunConfig::new(RunConfig::cell_id(backend, class, demo), backend, class, demo);
                c.top_k = a.top_k;
                c.max_actions = a.max_actions;
                c.force_select_at = a.force_select_at;
                c.temperature = a.temperature;
                c.seed = Some(a.seed);
                configs.push(c);
            }
        }
    }
    let matrix = RunMatrix { configs, dataset: a.dataset.clone(), out_dir: a.out.clone(), concurrency_limit: a.jobs };
    matrix.validate().map_err(usage)?;
    Ok(matrix)
}

fn run(a: RunArgs) -> CliResult {
    let matrix = resolve_matrix(&a)?;
    check_backends(&a.backend)?;
    let needs_gateway = matrix.configs.iter().any(|c| c.command_class != CommandClass::NoCommands);
    let gateway_config = if needs_gateway { Some(gateway_config(&a.provider)?) } else { None };
    if a.dry_run {
        let plan = json!({
            "matrix": matrix,
            "provider": gateway_config.as_ref().map(|c| &c.provider),
            "cutoff_year": a.cutoff_year,
        });
        println!("{}", serde_json::to_string_pretty(&plan).map_err(runtime)?);
        return Ok(());
    }
    let instances = load_dataset(&a.dataset).map_err(runtime)?;
    let backends = build_backends(&a.backend)?;
    let gateway = gateway_config.map(|c| Gateway::from_config(&c)).transpose().map_err(runtime)?;
    let clock = match a.clock {
        ClockArg::Wall => ClockKind::Wall,
        ClockArg::Logical => ClockKind::Logical,
        ClockArg::Auto if a.backend.backends.iter().all(|b| b == SCRIPTED) => ClockKind::Logical,
        ClockArg::Auto => ClockKind::Wall,
    };
    let out = run_matrix(&matrix, &instances, &backends, gateway.as_ref(), clock, a.cutoff_year).map_err(|e| match e {
        MatrixError::InvalidConfig { .. } | MatrixError::DuplicateConfig(_) => usage(e),
        other => runtime(other),
    })?;
    print!("{}", render_markdown(&out.report));
    eprintln!(
        "{} run(s); logs in {}, report in {}",
        out.runs.len(),
        a.out.join(TRAJECTORY_DIR).display(),
        a.out.display()
    );
    Ok(())
}

/// The run directory that owns `trajectories`, for writing reports next to it.
fn run_dir(trajectories: &Path) -> PathBuf {
    if trajectories.file_name().is_some_and(|n| n == TRAJECTORY_DIR) {
        trajectories.parent().map(Path::to_path_buf).unwrap_or_default()
    } else {
        trajectories.to_path_buf()
    }
}

fn replayed(dir: &Path, cutoff: i32, annotations: Option<&Path>) -> Result<AggregateReport, CliError> {
    if !dir.is_dir() {
        return Err(runtime(format!("{} is not a directory", dir.display())));
    }
    let labels = annotations.map(load_annotations).transpose().map_err(runtime)?;
    let (runs, report) = replay(dir, cutoff, labels.as_ref()).map_err(runtime)?;
    if runs.is_empty() {
        log::warn!("no trajectory logs under {}", dir.display());
    }
    Ok(report)
}

fn eval(a: EvalArgs) -> CliResult {
    let report = replayed(&a.trajectories, a.cutoff_year, a.annotations.as_deref())?;
    if let Some(out) = &a.out {
        emit_report(&report, out).map_err(runtime)?;
    }
    print!("{}", render_markdown(&report));
    Ok(())
}

fn report(a: ReportArgs) -> CliResult {
    let report = replayed(&a.trajectories, a.cutoff_year, None)?;
    match a.format {
        ReportFormat::Markdown => print!("{}", render_markdown(&report)),
        ReportFormat::Csv => print!("{}", render_csv(&report)),
        ReportFormat::Json => println!("{}", serde_json::to_string_pretty(&report).map_err(runtime)?),
    }
    Ok(())
}

fn replay_cmd(a: ReplayArgs) -> CliResult {
    let report = replayed(&a.trajectories, a.cutoff_year, None)?;
    let out = a.out.unwrap_or_else(|| run_dir(&a.trajectories));
    let (csv, md) = emit_report(&report, &out).map_err(runtime)?;
    println!("{}\n{}", csv.display(), md.display());
    Ok(())
}

fn embedder(args: &EmbedderArgs, dim: usize) -> Result<Box<dyn Embedder>, CliError> {
    if dim == 0 {
        return Err(usage("`--dim` must be positive"));
    }
    Ok(match args.embedder {
        EmbedderArg::Hashing => Box::new(HashingEmbedder::new(dim)),
        EmbedderArg::Specter => Box::new(
            SpecterEmbedder::new(args.embedder_url.as_deref(), dim, Duration::from_secs(60)).map_err(runtime)?,
        ),
    })
}

fn baseline(command: BaselineCommand) -> CliResult {
    match command {
        BaselineCommand::Ingest { metadata, store, representation, embedder: e, requests_per_second } => {
            if !(requests_per_second > 0.0 && requests_per_second.is_finite()) {
                return Err(usage("`--requests-per-second` must be positive"));
            }
            let kind = match representation {
                RepresentationArg::Title => RepresentationKind::TitleOnly,
                RepresentationArg::TitleAbstract => RepresentationKind::TitleAndAbstract,
            };
            let embedder = embedder(&e, e.dim)?;
            let corpus = ingest_metadata(&metadata, embedder.as_ref(), kind, &RateLimiter::new(requests_per_second))
                .map_err(runtime)?;
            corpus.save(&store).map_err(runtime)?;
            println!("{} paper(s) embedded into {}", corpus.len(), store.display());
        }
        BaselineCommand::Eval { dataset, store, embedder: e, out } => {
            let corpus = CorpusStore::load(&store).map_err(runtime)?;
            let instances = load_dataset(&dataset).map_err(runtime)?;
            let embedder = embedder(&e, corpus.dim())?;
            let report = evaluate_baseline(&instances, &corpus, embedder.as_ref());
            if let Some(out) = out {
                write_jsonl(&out, &report.results)?;
            }
            println!("top-1 accuracy {:.1}% ({}/{})", report.accuracy_pct(), report.correct, report.total);
        }
    }
    Ok(())
}

fn write_jsonl<T: serde::Serialize>(path: &Path, items: &[T]) -> CliResult {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(runtime)?;
    }
    let mut file = fs::File::create(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    for item in items {
        let line = serde_json::to_string(item).map_err(runtime)?;
        writeln!(file, "{line}").map_err(runtime)?;
    }
    Ok(())
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| runtime(format!("{} line {}: {e}", path.display(), i + 1))))
        .collect()
}

fn filter(a: FilterArgs) -> CliResult {
    if a.repeats == 0 {
        return Err(usage("`--repeats` must be at least 1"));
    }
    let backend = single_backend(&a.backend)?;
    let candidates = load_dataset(&a.dataset).map_err(runtime)?;
    let outcome = memorization_filter(&candidates, backend.as_ref(), a.repeats);
    fs::create_dir_all(&a.out).map_err(runtime)?;
    write_jsonl(&a.out.join("kept.jsonl"), &outcome.kept)?;
    write_jsonl(&a.out.join("removed.jsonl"), &outcome.removed)?;
    write_jsonl(&a.out.join("verdicts.jsonl"), &outcome.verdicts)?;
    println!(
        "{} candidate(s): {} removed, {} kept ({} repeats)",
        candidates.len(),
        outcome.removed.len(),
        outcome.kept.len(),
        a.repeats
    );
    Ok(())
}

fn ambiguity(a: AmbiguityArgs) -> CliResult {
    let lines: Vec<AmbiguityLine> = read_jsonl(&a.input)?;
    let stats = ambiguity_stats(lines.iter().map(|l| (l.text.as_str(), l.target.as_str())));
    if a.json {
        println!("{}", serde_json::to_string_pretty(&stats).map_err(runtime)?);
    } else {
        println!(
            "{} of {} line(s) with citation markup flagged ({:.2}%); {} line(s) without recognizable markup",
            stats.flagged,
            stats.recognized,
            stats.flagged_pct(),
            stats.unrecognized
        );
    }
    Ok(())
}

fn tags(a: TagsArgs) -> CliResult {
    let backend = single_backend(&a.backend)?;
    let papers: Vec<PaperMeta> = read_jsonl(&a.papers)?;
    let mut rows = Vec::new();
    let mut failures = 0;
    for paper in &papers {
        match generate_tags(paper, backend.as_ref()) {
            Ok(tags) => rows.push(json!({ "paper_id": paper.paper_id, "tags": tags })),
            Err(e) => {
                failures += 1;
                eprintln!("{e}");
            }
        }
    }
    write_jsonl(&a.out, &rows)?;
    println!("tagged {} of {} paper(s)", rows.len(), papers.len());
    if failures > 0 {
        return Err(runtime(format!("{failures} paper(s) could not be tagged")));
    }
    Ok(())
}

fn human(a: HumanArgs) -> CliResult {
    if a.time_limit == 0 {
        return Err(usage("`--time-limit` must be positive"));
    }
    let instances = load_dataset(&a.dataset).map_err(runtime)?;
    let picked = sample_instances(&instances, a.sample, a.seed);
    let mut source = TerminalSource::new();
    let results = run_human_session(&picked, &mut source, Duration::from_secs(a.time_limit));
    write_jsonl(&a.out, &results)?;
    let correct = results.iter().filter(|r| r.correct).count();
    let answered: Vec<f64> = results.iter().filter(|r| r.answer.is_some()).map(|r| r.elapsed_secs).collect();
    let mean = if answered.is_empty() { 0.0 } else { answered.iter().sum::<f64>() / answered.len() as f64 };
    println!(
        "{correct} of {} correct ({:.1}%); {} answered, mean time {mean:.1}s",
        results.len(),
        if results.is_empty() { 0.0 } else { 100.0 * correct as f64 / results.len() as f64 },
        answered.len()
    );
    Ok(())
}
