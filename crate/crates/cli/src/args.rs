use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use citefind::domain::CommandClass;
use citefind::harness::{DEFAULT_CUTOFF_YEAR, DEFAULT_REPEATS, DEFAULT_TIME_LIMIT_SECS};

pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Parser)]
#[command(name = "citefind", version, about = "Citation attribution agent and benchmark harness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the agent over a dataset for every (backend, commands, demo) cell.
    Run(RunArgs),
    /// Re-score saved trajectories, optionally with error-label annotations.
    Eval(EvalArgs),
    /// Embedding nearest-neighbour baseline.
    #[command(subcommand)]
    Baseline(BaselineCommand),
    /// Drop candidates a tool-less model already answers from memory.
    Filter(FilterArgs),
    /// Share of lines whose target sits in a multi-key citation group.
    Ambiguity(AmbiguityArgs),
    /// Generate three topic tags per paper.
    Tags(TagsArgs),
    /// Timed human attribution session in the terminal.
    Human(HumanArgs),
    /// Print the report for saved trajectories.
    Report(ReportArgs),
    /// Rebuild report files from trajectory logs without network access.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum CommandsArg {
    None,
    SearchOnly,
    SearchRead,
}

impl From<CommandsArg> for CommandClass {
    fn from(c: CommandsArg) -> Self {
        match c {
            CommandsArg::None => CommandClass::NoCommands,
            CommandsArg::SearchOnly => CommandClass::SearchOnly,
            CommandsArg::SearchRead => CommandClass::SearchAndRead,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProviderArg {
    Live,
    Recorded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClockArg {
    /// Logical clock when every backend is scripted, wall clock otherwise.
    Auto,
    Wall,
    Logical,
}

#[derive(Debug, Clone, Args)]
pub struct BackendArgs {
    /// Backend id: `scripted` (with --script) or an id from the registry.
    #[arg(long = "backend", required = true)]
    pub backends: Vec<String>,
    /// Reply script for the `scripted` backend.
    #[arg(long)]
    pub script: Option<PathBuf>,
    /// Backend registry TOML; the built-in registry is used otherwise.
    #[arg(long)]
    pub registry: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ProviderArgs {
    #[arg(long, value_enum, default_value_t = ProviderArg::Live)]
    pub provider: ProviderArg,
    /// Fixture directory for `--provider recorded`.
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// Base URL override for the live provider.
    #[arg(long)]
    pub api_base: Option<String>,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// Live request rate.
    #[arg(long, default_value_t = 1.0)]
    pub requests_per_second: f64,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[command(flatten)]
    pub backend: BackendArgs,
    /// Command classes to run; repeat or comma-separate for several.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "search_read")]
    pub commands: Vec<CommandsArg>,
    /// Include the demonstration trajectory (default).
    #[arg(long, overrides_with = "no_demo")]
    pub demo: bool,
    #[arg(long, overrides_with = "demo")]
    pub no_demo: bool,
    /// Run each cell both with and without the demonstration.
    #[arg(long, conflicts_with_all = ["demo", "no_demo"])]
    pub both_demo: bool,
    #[arg(long, default_value_t = 10)]
    pub top_k: usize,
    #[arg(long, default_value_t = 15)]
    pub max_actions: u32,
    #[arg(long, default_value_t = 14)]
    pub force_select_at: u32,
    #[arg(long, default_value_t = 0.95)]
    pub temperature: f64,
    #[arg(long, default_value_t = 4)]
    pub jobs: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub provider: ProviderArgs,
    #[arg(long, default_value_t = DEFAULT_CUTOFF_YEAR)]
    pub cutoff_year: i32,
    #[arg(long, value_enum, default_value_t = ClockArg::Auto)]
    pub clock: ClockArg,
    /// Print the resolved run matrix and exit.
    #[arg(long)]
    pub dry_run: bool,
}

impl RunArgs {
    pub fn demo_values(&self) -> Vec<bool> {
        if self.both_demo {
            vec![false, true]
        } else {
            vec![!self.no_demo]
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Run output directory or its trajectories subdirectory.
    #[arg(long)]
    pub trajectories: PathBuf,
    /// CSV with columns instance_id,config_id,label.
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    /// Where to write the report; defaults to stdout only.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_CUTOFF_YEAR)]
    pub cutoff_year: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EmbedderArg {
    Hashing,
    Specter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum RepresentationArg {
    Title,
    TitleAbstract,
}

#[derive(Debug, Clone, Args)]
pub struct EmbedderArgs {
    #[arg(long, value_enum, default_value_t = EmbedderArg::Hashing)]
    pub embedder: EmbedderArg,
    #[arg(long, default_value_t = 768)]
    pub dim: usize,
    /// Endpoint override for the SPECTER embedder.
    #[arg(long)]
    pub embedder_url: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum BaselineCommand {
    /// Embed a metadata dump into a corpus store.
    Ingest {
        /// Line-delimited {"paper_id", "title", "abstract"} records.
        #[arg(long)]
        metadata: PathBuf,
        #[arg(long)]
        store: PathBuf,
        #[arg(long, value_enum, default_value_t = RepresentationArg::TitleAbstract)]
        representation: RepresentationArg,
        #[command(flatten)]
        embedder: EmbedderArgs,
        #[arg(long, default_value_t = 1.0)]
        requests_per_second: f64,
    },
    /// Top-1 retrieval accuracy of excerpts against a corpus store.
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        store: PathBuf,
        #[command(flatten)]
        embedder: EmbedderArgs,
        /// Per-instance results as JSON lines.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// Candidate instances.
    #[arg(long)]
    pub dataset: PathBuf,
    #[command(flatten)]
    pub backend: BackendArgs,
    #[arg(long, default_value_t = DEFAULT_REPEATS)]
    pub repeats: u32,
    /// Writes kept.jsonl, removed.jsonl and verdicts.jsonl here.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AmbiguityArgs {
    /// Line-delimited {"text", "target"} records.
    #[arg(long)]
    pub input: PathBuf,
    /// Print the statistics as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct TagsArgs {
    /// Line-delimited paper records.
    #[arg(long)]
    pub papers: PathBuf,
    #[command(flatten)]
    pub backend: BackendArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct HumanArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Number of instances to draw; all when omitted.
    #[arg(long)]
    pub sample: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_TIME_LIMIT_SECS)]
    pub time_limit: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Markdown,
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub trajectories: PathBuf,
    #[arg(long, value_enum, default_value_t = ReportFormat::Markdown)]
    pub format: ReportFormat,
    #[arg(long, default_value_t = DEFAULT_CUTOFF_YEAR)]
    pub cutoff_year: i32,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub trajectories: PathBuf,
    #[arg(long, default_value_t = DEFAULT_CUTOFF_YEAR)]
    pub cutoff_year: i32,
    /// Directory for report.csv and report.md; defaults to the run directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
