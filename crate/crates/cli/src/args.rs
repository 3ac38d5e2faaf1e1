use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "instrir", version, about = "Instruction-following retrieval toolkit")]
#[command(args_override_self = true)]
pub struct Cli {
    /// TOML file whose keys mirror the long flag names.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    #[serde(skip)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Generate instructions for source training instances.
    GenInstructions(GenInstructionsArgs),
    /// Generate and judge instruction negatives for instruction records.
    MineNegatives(MineNegativesArgs),
    /// Assemble training instances from sources, records and candidates.
    Assemble(AssembleArgs),
    /// Apply an ablation transform to a training file.
    Ablate(AblateArgs),
    /// Word-count statistics of generated instructions.
    Stats(StatsArgs),
    /// Build a BM25 index or a validated dense embedding file.
    Index(IndexArgs),
    /// Retrieve top-k documents and write a TREC run.
    Search(SearchArgs),
    /// Score runs against qrels.
    Eval(EvalArgs),
    /// Evaluate a prompt pool and select a prompt from dev scores.
    PromptSelect(PromptSelectArgs),
    /// Agreement between two binary label files.
    Agreement(AgreementArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GenInstructions(_) => "gen-instructions",
            Command::MineNegatives(_) => "mine-negatives",
            Command::Assemble(_) => "assemble",
            Command::Ablate(_) => "ablate",
            Command::Stats(_) => "stats",
            Command::Index(_) => "index",
            Command::Search(_) => "search",
            Command::Eval(_) => "eval",
            Command::PromptSelect(_) => "prompt-select",
            Command::Agreement(_) => "agreement",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BackendArgs {
    /// `mock:<table.jsonl>` or an OpenAI-compatible base URL (`http:<url>`).
    #[arg(long)]
    pub backend: String,
    #[arg(long, default_value_t = 0.0)]
    pub temperature: f64,
    #[arg(long, default_value_t = 2048)]
    pub max_tokens: u32,
    /// Directory for the response cache; disabled when absent.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// Environment variable holding the API key.
    #[arg(long, default_value = "OPENAI_API_KEY")]
    pub api_key_env: String,
    #[arg(long, default_value_t = 120)]
    pub timeout_secs: u64,
    #[arg(long, default_value_t = 4)]
    pub max_retries: u32,
    #[arg(long, default_value_t = 500)]
    pub retry_base_ms: u64,
    /// Maximum in-flight backend requests.
    #[arg(long, default_value_t = 8)]
    pub concurrency: usize,
    /// Directory with template files overriding the built-in prompts.
    #[arg(long)]
    pub templates: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct JudgeArgs {
    /// Backend for relevance judgments (same syntax as --backend).
    #[arg(long)]
    pub judge_backend: Option<String>,
    #[arg(long, default_value = "jhu-clsp/FollowIR-7B")]
    pub judge_model: String,
    #[arg(long, default_value_t = 16)]
    pub judge_max_tokens: u32,
}

#[derive(Debug, Args, Serialize)]
pub struct GenInstructionsArgs {
    /// Source training JSONL (queries without instructions, with hard negatives).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "meta-llama/Meta-Llama-3-70B-Instruct")]
    pub model: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Generate all 16 style/length cells per query.
    #[arg(long)]
    pub exhaustive_grid: bool,
    /// Hard negatives shown to the model as non-relevant documents.
    #[arg(long, default_value_t = 3)]
    pub prompt_negatives: usize,
    #[command(flatten)]
    pub backend: BackendArgs,
    #[command(flatten)]
    pub judge: JudgeArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct MineNegativesArgs {
    /// Instruction records JSONL from gen-instructions.
    #[arg(long)]
    pub records: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "gpt-4o-2024-05-13")]
    pub model: String,
    #[command(flatten)]
    pub backend: BackendArgs,
    #[command(flatten)]
    pub judge: JudgeArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct AssembleArgs {
    /// Source training JSONL.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub records: PathBuf,
    /// Candidate sets JSONL from mine-negatives.
    #[arg(long)]
    pub candidates: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Audit JSONL (default: `<out>.audit.jsonl`).
    #[arg(long)]
    pub audit: Option<PathBuf>,
    #[arg(long, default_value_t = 15)]
    pub negatives: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also emit every source instance without an instruction.
    #[arg(long)]
    pub include_originals: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformArg {
    RepeatQuery,
    Generic,
    Swap,
}

#[derive(Debug, Args, Serialize)]
pub struct AblateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub transform: TransformArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Generic instruction pool, one per line (default: built-in pool of 50).
    #[arg(long)]
    pub pool: Option<PathBuf>,
    /// Swap only: never leave an instance with its own instruction.
    #[arg(long)]
    pub derangement: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct StatsArgs {
    #[arg(long)]
    pub records: PathBuf,
    /// Write a manifest for this stdout-only command.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum IndexKind {
    Bm25,
    Dense,
}

#[derive(Debug, Args, Serialize)]
pub struct IndexArgs {
    #[arg(value_enum)]
    pub kind: IndexKind,
    /// BM25: corpus JSONL.
    #[arg(long, required_if_eq("kind", "bm25"))]
    pub corpus: Option<PathBuf>,
    /// Dense: EMB1 passage embeddings.
    #[arg(long, required_if_eq("kind", "dense"))]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.9)]
    pub k1: f64,
    #[arg(long, default_value_t = 0.4)]
    pub b: f64,
    /// Dense: keep vectors as given instead of L2-normalizing them.
    #[arg(long)]
    pub no_normalize: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct SearchArgs {
    #[arg(value_enum)]
    pub kind: IndexKind,
    /// BM25 index file or EMB1 passage embeddings.
    #[arg(long)]
    pub index: PathBuf,
    /// BM25: queries JSONL. Dense: EMB1 query embeddings.
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub k: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub tag: Option<String>,
    /// BM25: replace each query's instruction with this prompt.
    #[arg(long)]
    pub prompt: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GainArg {
    Linear,
    Exponential,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AggregationArg {
    PerCase,
    PerQuery,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    /// Run file; repeat once per prompt for robustness@k.
    #[arg(long, required = true)]
    pub run: Vec<PathBuf>,
    #[arg(long)]
    pub qrels: PathBuf,
    /// ndcg@k, map@k, mrr@k, robustness@k or p-mrr (repeatable).
    #[arg(long, required = true)]
    pub metric: Vec<String>,
    /// p-MRR: run with the changed instructions.
    #[arg(long)]
    pub run_changed: Option<PathBuf>,
    /// p-MRR: qrels under the changed instructions.
    #[arg(long)]
    pub qrels_changed: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub max_rank: usize,
    #[arg(long, value_enum, default_value_t = AggregationArg::PerCase)]
    pub pmrr_aggregation: AggregationArg,
    #[arg(long, value_enum, default_value_t = GainArg::Linear)]
    pub gain: GainArg,
    /// Score run queries without judgments as 0 instead of skipping them.
    #[arg(long)]
    pub include_unjudged: bool,
    /// Require canonical rank columns instead of re-sorting by score.
    #[arg(long)]
    pub strict: bool,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct PromptSelectArgs {
    /// Precomputed score table (`prompt_index<TAB>dev<TAB>test`, plus a `none` row).
    #[arg(long, conflicts_with_all = ["index", "test_queries"])]
    pub scores: Option<PathBuf>,
    /// BM25 index to retrieve with.
    #[arg(long, requires_all = ["test_queries", "test_qrels"])]
    pub index: Option<PathBuf>,
    #[arg(long)]
    pub test_queries: Option<PathBuf>,
    #[arg(long)]
    pub test_qrels: Option<PathBuf>,
    #[arg(long, requires = "dev_qrels")]
    pub dev_queries: Option<PathBuf>,
    #[arg(long)]
    pub dev_qrels: Option<PathBuf>,
    /// Dev queries sampled for selection.
    #[arg(long, default_value_t = 10)]
    pub dev_sample: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Prompt pool, one per line (default: built-in pool of 10).
    #[arg(long)]
    pub prompts: Option<PathBuf>,
    /// Emit a markdown summary row instead of the TSV report.
    #[arg(long)]
    pub markdown: bool,
    #[arg(long, default_value = "dataset")]
    pub dataset: String,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct AgreementArgs {
    /// Labels, one per line (1/0, true/false, yes/no, relevant/not relevant).
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}
