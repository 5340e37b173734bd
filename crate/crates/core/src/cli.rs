//! The `sara` command line. Every command prints one JSON document on stdout
//! and diagnostics on stderr.
//!
//! Exit status: 0 success, 1 usage or configuration error, 2 data error,
//! 3 backend or transport error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::assemble::{dispatch, serialize_request, AssembleError, GENERATE_URL_ENV};
use crate::embed::{BackendKind, EmbedError};
use crate::evalkit::{evaluate_files, write_csv, EvalError, Normalization};
use crate::pipeline::{chunk_corpus, BudgetModeName, Engine, PipelineError, RetrievalMode, RunConfig};
use crate::retrieval::{persist_index, Index};
use crate::select::{SelectError, Strategy};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_BACKEND: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "sara", version, about = "Retrieve, select and assemble token-budgeted hybrid prompts")]
struct Cli {
    /// JSON run configuration; explicit flags take precedence over its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Chunk a corpus JSONL file and persist a BM25 index.
    Index(IndexArgs),
    /// Rank chunks for a query.
    Retrieve(RetrieveArgs),
    /// Retrieve and run evidence selection.
    Select(SelectArgs),
    /// Emit a generation request for a query.
    Assemble(AssembleArgs),
    /// Emit one request per natural-context count k = 0..=N.
    Sweep(SweepArgs),
    /// Score predictions against gold answers.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
struct IndexArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Maximum tokens per chunk [default: 256]
    #[arg(long)]
    chunk_size: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Bm25,
    Dense,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BackendArg {
    HashStub,
    Remote,
}

#[derive(Debug, Args)]
struct EngineArgs {
    /// Index directory written by `sara index`.
    #[arg(long)]
    index: Option<PathBuf>,
    /// Retrieval mode [default: bm25]
    #[arg(long, value_enum)]
    retrieval: Option<ModeArg>,
    /// Embedding backend [default: hash-stub]
    #[arg(long, value_enum)]
    embed_backend: Option<BackendArg>,
    /// Embedding dimension [default: 64]
    #[arg(long)]
    embed_dim: Option<usize>,
    /// Embedding service base URL (else SARA_EMBED_URL).
    #[arg(long)]
    embed_url: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StrategyArg {
    Emb,
    Csi,
}

#[derive(Debug, Args)]
struct SelectionArgs {
    /// Selection strategy [default: emb]
    #[arg(long, value_enum)]
    strategy: Option<StrategyArg>,
    /// Retrieved candidates considered [default: 10]
    #[arg(long)]
    n: Option<usize>,
    /// Drop CSI candidates below this many nats per token.
    #[arg(long)]
    min_csi: Option<f64>,
    /// Condition CSI on the query as well as the selected texts.
    #[arg(long)]
    csi_include_query: bool,
    /// n-gram proxy order [default: 3]
    #[arg(long)]
    order: Option<usize>,
    /// n-gram additive smoothing [default: 0.1]
    #[arg(long)]
    alpha: Option<f64>,
    /// Log-probability service base URL (else SARA_LOGPROB_URL).
    #[arg(long)]
    logprob_url: Option<String>,
}

#[derive(Debug, Args)]
struct RetrieveArgs {
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long)]
    query: String,
    /// Results to return [default: 10]
    #[arg(long)]
    n: Option<usize>,
    /// Retrieval mode, same as --retrieval [default: bm25]
    #[arg(long, value_enum, conflicts_with = "retrieval")]
    mode: Option<ModeArg>,
}

#[derive(Debug, Args)]
struct SelectArgs {
    #[command(flatten)]
    engine: EngineArgs,
    #[command(flatten)]
    selection: SelectionArgs,
    #[arg(long)]
    query: String,
    /// Contexts to select [default: 5]
    #[arg(long)]
    k: Option<usize>,
    /// Write the per-step JSONL trace here.
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BudgetModeArg {
    FixedK,
    BudgetFit,
}

#[derive(Debug, Args)]
struct BudgetArgs {
    /// Token budget [default: 512]
    #[arg(long)]
    budget: Option<usize>,
    /// Token-equivalents per compression vector [default: 1]
    #[arg(long)]
    vector_cost: Option<usize>,
    /// Contexts to assemble, N [default: --n]
    #[arg(long)]
    contexts: Option<usize>,
    /// Maximum compression vectors per context [default: 8]
    #[arg(long)]
    max_vectors: Option<usize>,
    /// Projection map JSON applied to every compression vector.
    #[arg(long, value_name = "FILE")]
    projection: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AssembleArgs {
    #[command(flatten)]
    engine: EngineArgs,
    #[command(flatten)]
    selection: SelectionArgs,
    #[command(flatten)]
    budget: BudgetArgs,
    #[arg(long)]
    query: String,
    /// Partition mode [default: fixed-k]
    #[arg(long = "mode", value_enum)]
    budget_mode: Option<BudgetModeArg>,
    /// Natural-text contexts under fixed-k [default: 5]
    #[arg(long)]
    k: Option<usize>,
    /// Also write the canonical request bytes here.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Send the request to the generation server (SARA_GENERATE_URL).
    #[arg(long)]
    dispatch: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    engine: EngineArgs,
    #[command(flatten)]
    selection: SelectionArgs,
    #[command(flatten)]
    budget: BudgetArgs,
    #[arg(long)]
    query: String,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Predictions JSONL: {"id", "prediction"}.
    #[arg(long)]
    pred: PathBuf,
    /// Gold JSONL: {"id", "answers": [...]}.
    #[arg(long)]
    gold: PathBuf,
    /// Also write the JSON report here.
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
    /// Write per-record rows as CSV here.
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
    /// Remove articles (a, an, the) before scoring.
    #[arg(long)]
    strip_articles: bool,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl ToString) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.to_string(),
        }
    }

    fn data(message: impl ToString) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.to_string(),
        }
    }

    fn backend(message: impl ToString) -> Self {
        Self {
            code: EXIT_BACKEND,
            message: message.to_string(),
        }
    }
}

fn is_config_error(err: &PipelineError) -> bool {
    match err {
        PipelineError::Config(_) => true,
        PipelineError::Embed(e) => matches!(
            e,
            EmbedError::Config(_) | EmbedError::ZeroDimension | EmbedError::InvalidProjection(_)
        ),
        PipelineError::Select(e) => matches!(e, SelectError::InvalidConfig(_)),
        PipelineError::Assemble(e) => matches!(
            e,
            AssembleError::InvalidPolicy(_) | AssembleError::UnknownTemplate(_) | AssembleError::InvalidK { .. }
        ),
        PipelineError::Proxy(e) => matches!(
            e,
            crate::proxylm::ProxyError::InvalidOrder | crate::proxylm::ProxyError::InvalidAlpha(_)
        ),
        _ => false,
    }
}

impl From<PipelineError> for Failure {
    fn from(err: PipelineError) -> Self {
        if err.is_backend_failure() {
            Failure::backend(err)
        } else if is_config_error(&err) {
            Failure::usage(err)
        } else {
            Failure::data(err)
        }
    }
}

impl From<EvalError> for Failure {
    fn from(err: EvalError) -> Self {
        Failure::data(err)
    }
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), Failure> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(Failure::data)?;
    writeln!(out).map_err(Failure::data)
}

fn write_file(path: &PathBuf, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, bytes).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn apply_engine(cfg: &mut RunConfig, args: &EngineArgs) {
    if let Some(p) = &args.index {
        cfg.index_path = Some(p.clone());
    }
    if let Some(m) = args.retrieval {
        cfg.retrieval_mode = match m {
            ModeArg::Bm25 => RetrievalMode::Bm25,
            ModeArg::Dense => RetrievalMode::Dense,
        };
    }
    if let Some(b) = args.embed_backend {
        cfg.embed.kind = match b {
            BackendArg::HashStub => BackendKind::HashStub,
            BackendArg::Remote => BackendKind::Remote,
        };
    }
    if let Some(d) = args.embed_dim {
        cfg.embed.dim = d;
    }
    if let Some(u) = &args.embed_url {
        cfg.embed.endpoint = Some(u.clone());
    }
}

fn apply_selection(cfg: &mut RunConfig, args: &SelectionArgs) {
    if let Some(s) = args.strategy {
        cfg.selection.strategy = match s {
            StrategyArg::Emb => Strategy::Emb,
            StrategyArg::Csi => Strategy::Csi,
        };
    }
    if let Some(n) = args.n {
        cfg.selection.n = n;
    }
    if args.min_csi.is_some() {
        cfg.selection.min_csi_filter = args.min_csi;
    }
    if args.csi_include_query {
        cfg.selection.csi_include_query = true;
    }
    if let Some(o) = args.order {
        cfg.proxy.order = o;
    }
    if let Some(a) = args.alpha {
        cfg.proxy.alpha = a;
    }
    if let Some(u) = &args.logprob_url {
        cfg.proxy.endpoint = Some(u.clone());
    }
}

fn apply_budget(cfg: &mut RunConfig, args: &BudgetArgs) {
    if let Some(b) = args.budget {
        cfg.budget_tokens = b;
    }
    if let Some(c) = args.vector_cost {
        cfg.vector_token_cost = c;
    }
    if args.contexts.is_some() {
        cfg.total_contexts = args.contexts;
    }
    if let Some(m) = args.max_vectors {
        cfg.max_vectors_per_context = m;
    }
    if let Some(p) = &args.projection {
        cfg.projection_path = Some(p.clone());
    }
}

fn run_index(mut cfg: RunConfig, args: IndexArgs, out: &mut dyn Write) -> Result<(), Failure> {
    if let Some(c) = args.chunk_size {
        cfg.chunk_size = c;
    }
    if cfg.chunk_size == 0 {
        return Err(Failure::usage("chunk size must be at least 1"));
    }
    let (documents, chunks) = chunk_corpus(&args.corpus, cfg.chunk_size)?;
    let index = Index::build(
        &chunks,
        std::sync::Arc::new(crate::textcore::RuleTokenizer),
        Default::default(),
    )
    .map_err(|e| Failure::from(PipelineError::from(e)))?;
    persist_index(&index, &args.out).map_err(|e| Failure::from(PipelineError::from(e)))?;
    write_json(
        out,
        &json!({
            "index": args.out,
            "documents": documents,
            "chunks": index.doc_count(),
            "avg_chunk_len": index.avg_chunk_len(),
            "vocabulary_size": index.vocabulary_size(),
            "chunk_size": cfg.chunk_size,
            "tokenizer_profile": index.tokenizer_profile(),
        }),
    )
}

fn run_retrieve(mut cfg: RunConfig, mut args: RetrieveArgs, out: &mut dyn Write) -> Result<(), Failure> {
    if args.mode.is_some() {
        args.engine.retrieval = args.mode;
    }
    apply_engine(&mut cfg, &args.engine);
    let n = args.n.unwrap_or(cfg.selection.n);
    if n == 0 {
        return Err(Failure::usage("--n must be at least 1"));
    }
    let engine = Engine::open(cfg)?;
    let results = engine.retrieve(&args.query, n)?;
    let rows: Vec<_> = results
        .iter()
        .map(|r| {
            let record = engine.index().chunk(&r.chunk_ref);
            json!({
                "rank": r.rank,
                "chunk_ref": r.chunk_ref,
                "retrieval_score": r.retrieval_score,
                "doc_id": record.map(|c| c.doc_id.as_str()),
                "text": record.map(|c| c.text.as_str()),
            })
        })
        .collect();
    write_json(
        out,
        &json!({
            "query": args.query,
            "mode": engine.config().retrieval_mode,
            "results": rows,
        }),
    )
}

fn run_select(mut cfg: RunConfig, args: SelectArgs, out: &mut dyn Write) -> Result<(), Failure> {
    apply_engine(&mut cfg, &args.engine);
    apply_selection(&mut cfg, &args.selection);
    if let Some(k) = args.k {
        cfg.selection.k_sel = k;
    }
    let engine = Engine::open(cfg)?;
    let evidence = engine.select(&args.query)?;
    if let Some(path) = &args.trace {
        let mut buf = Vec::new();
        evidence.write_trace(&mut buf).map_err(Failure::data)?;
        write_file(path, &buf)?;
    }
    write_json(
        out,
        &json!({
            "query": args.query,
            "strategy": evidence.strategy,
            "selected": evidence.selected,
        }),
    )
}

fn run_assemble(
    mut cfg: RunConfig,
    args: AssembleArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), Failure> {
    apply_engine(&mut cfg, &args.engine);
    apply_selection(&mut cfg, &args.selection);
    apply_budget(&mut cfg, &args.budget);
    if let Some(m) = args.budget_mode {
        cfg.budget_mode = match m {
            BudgetModeArg::FixedK => BudgetModeName::FixedK,
            BudgetModeArg::BudgetFit => BudgetModeName::BudgetFit,
        };
    }
    if let Some(k) = args.k {
        cfg.k = k;
    }
    let endpoint = if args.dispatch {
        let url = std::env::var(GENERATE_URL_ENV).ok().filter(|s| !s.is_empty());
        Some(url.ok_or_else(|| Failure::usage(format!("--dispatch needs {GENERATE_URL_ENV}")))?)
    } else {
        None
    };
    let engine = Engine::open(cfg)?;
    let prompt = engine.assemble(&args.query)?;
    if !prompt.usage.within_budget {
        let _ = writeln!(
            err,
            "warning: request uses {} of {} budget tokens",
            prompt.usage.total_tokens, prompt.usage.budget_tokens
        );
    }
    if let Some(path) = &args.out {
        write_file(path, &serialize_request(&prompt.request))?;
    }
    let answer = match endpoint {
        Some(url) => Some(dispatch(&url, &prompt.request).map_err(Failure::backend)?),
        None => None,
    };
    let mut value = serde_json::to_value(&prompt).map_err(Failure::data)?;
    if let Some(answer) = answer {
        value["answer"] = json!(answer);
    }
    write_json(out, &value)
}

fn run_sweep(mut cfg: RunConfig, args: SweepArgs, out: &mut dyn Write) -> Result<(), Failure> {
    apply_engine(&mut cfg, &args.engine);
    apply_selection(&mut cfg, &args.selection);
    apply_budget(&mut cfg, &args.budget);
    // Every k in 0..=N is rendered; the fixed-k bound is irrelevant here.
    cfg.k = 0;
    let engine = Engine::open(cfg)?;
    let entries = engine.sweep(&args.query)?;
    write_json(
        out,
        &json!({
            "query": args.query,
            "total_contexts": entries.len() - 1,
            "budget_tokens": engine.config().budget_tokens,
            "entries": entries,
        }),
    )
}

fn run_eval(args: EvalArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let norm = if args.strip_articles {
        Normalization::squad()
    } else {
        Normalization::LEXICAL
    };
    let report = evaluate_files(&args.pred, &args.gold, norm)?;
    if let Some(path) = &args.report {
        let bytes = serde_json::to_vec_pretty(&report).map_err(Failure::data)?;
        write_file(path, &bytes)?;
    }
    if let Some(path) = &args.csv {
        let file = std::fs::File::create(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
        write_csv(&report, file)?;
    }
    write_json(out, &report)
}

/// Runs the command line given by `args` (program name first) and returns
/// the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    let config = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(Failure::usage),
        None => Ok(RunConfig::default()),
    };
    let result = config.and_then(|cfg| match cli.command {
        Command::Index(a) => run_index(cfg, a, out),
        Command::Retrieve(a) => run_retrieve(cfg, a, out),
        Command::Select(a) => run_select(cfg, a, out),
        Command::Assemble(a) => run_assemble(cfg, a, out, err),
        Command::Sweep(a) => run_sweep(cfg, a, out),
        Command::Eval(a) => run_eval(a, out),
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}
