mod online;

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Parser, Subcommand};
use tracing::info;
use tracing_subscriber::EnvFilter;

use ragbench_core::corpus::corpus_stats;
use ragbench_core::harness::output::{
    generation_table, significance_table, summary_table, write_generation_csv, write_per_query_csv,
    write_recall_curve_csv, write_significance_csv, write_sweep_csv,
};
use ragbench_core::harness::{
    answer_questions, categorize_all, compare_methods, run_methods, sample_failures, summarize_generation, sweep,
    Engine, ExperimentConfig, Method, Providers, SweepAxis,
};
use ragbench_core::providers::{
    CallLedger, CompletionProvider, EmbeddingCache, EmbeddingProvider, Metered, RerankDoc, RerankHit, RerankProvider,
    Resilient, SystemClock,
};
use ragbench_core::strategies::PromptLibrary;
use ragbench_core::{load_corpus, load_queries, Corpus, LexicalIndex, QuerySet, RunReport};

use online::{Credentials, HttpCompletion, HttpEmbedder, HttpReranker};

#[derive(Parser)]
#[command(name = "ragbench", version, about = "Retrieval strategy benchmark for financial text-and-table QA")]
struct Cli {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for embeddings, bootstrap and sampling [default: 42, or the config value].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Use deterministic local providers only; never touches the network.
    #[arg(long, global = true)]
    offline: bool,
    /// Corpus JSONL (overrides `paths.corpus`).
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Query JSONL (overrides `paths.queries`).
    #[arg(long, global = true)]
    queries: Option<PathBuf>,
    /// Output directory (overrides `paths.out_dir`; default `out`).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// More log output; repeat for debug.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate corpus and queries and print dataset statistics.
    Ingest {
        /// Also write normalized copies into the output directory.
        #[arg(long)]
        write: bool,
    },
    /// Prepend an LLM summary to every document and save the new corpus.
    Contextualize {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Embed the corpus into the embedding cache.
    Embed {
        /// Embed the contextualized corpus as well.
        #[arg(long)]
        contextual: bool,
    },
    /// Build the BM25 index and save it.
    Index {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run retrieval methods and write a report with per-query CSVs.
    Run {
        /// Comma-separated methods; defaults to the config's method.
        #[arg(long, value_delimiter = ',')]
        methods: Vec<String>,
        /// Metric for the significance matrix when several methods run.
        #[arg(long, default_value = "recall@5")]
        metric: String,
    },
    /// Answer questions from retrieved context and score the answers.
    Generate {
        #[arg(long, value_delimiter = ',')]
        methods: Vec<String>,
        #[arg(long)]
        top_k: Option<usize>,
    },
    /// Recompute a stored report and print its summary.
    Eval {
        report: PathBuf,
        /// Fail unless regeneration reproduces the file byte for byte.
        #[arg(long)]
        check: bool,
    },
    /// Pairwise significance tests across stored reports.
    Compare {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long, default_value = "recall@5")]
        metric: String,
    },
    /// Run one method across values of a parameter.
    Sweep {
        /// One of alpha, rrf_k, rerank_pool, rerank_top_n.
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Sample retrieval failures from a report and categorize them.
    Failures {
        report: PathBuf,
        #[arg(long, default_value = "hybrid_rrf")]
        method: String,
        #[arg(long, default_value_t = 100)]
        n: usize,
        /// Skip the LLM categorization step.
        #[arg(long)]
        no_categorize: bool,
    },
}

struct Ctx {
    cfg: ExperimentConfig,
    offline: bool,
    out_dir: PathBuf,
}

impl Ctx {
    fn new(cli: &Cli) -> Result<Self> {
        let mut cfg = match &cli.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                toml::from_str::<ExperimentConfig>(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = cli.seed {
            cfg.seed = seed;
        }
        if let Some(p) = &cli.corpus {
            cfg.paths.corpus = Some(p.clone());
        }
        if let Some(p) = &cli.queries {
            cfg.paths.queries = Some(p.clone());
        }
        if let Some(p) = &cli.out_dir {
            cfg.paths.out_dir = Some(p.clone());
        }
        cfg.validate()?;
        let out_dir = cfg.paths.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
        Ok(Self { cfg, offline: cli.offline, out_dir })
    }

    fn out(&self, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.out_dir).with_context(|| format!("creating {}", self.out_dir.display()))?;
        Ok(self.out_dir.join(name))
    }

    fn corpus(&self) -> Result<Arc<Corpus>> {
        let path = self.cfg.paths.corpus.as_ref().context("no corpus given (--corpus or paths.corpus)")?;
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        Ok(Arc::new(load_corpus(BufReader::new(file)).with_context(|| format!("loading {}", path.display()))?))
    }

    fn queries(&self, corpus: &Corpus) -> Result<QuerySet> {
        let path = self.cfg.paths.queries.as_ref().context("no queries given (--queries or paths.queries)")?;
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        load_queries(BufReader::new(file), corpus).with_context(|| format!("loading {}", path.display()))
    }

    fn queries_if_any(&self, corpus: &Corpus) -> Result<QuerySet> {
        match self.cfg.paths.queries {
            Some(_) => self.queries(corpus),
            None => Ok(QuerySet::default()),
        }
    }

    fn cache(&self) -> Result<Arc<EmbeddingCache>> {
        Ok(Arc::new(match &self.cfg.paths.cache {
            Some(p) => EmbeddingCache::open(p).with_context(|| format!("opening cache {}", p.display()))?,
            None => EmbeddingCache::new(),
        }))
    }

    fn save_cache(&self, engine: &Engine) -> Result<()> {
        if let Some(p) = &self.cfg.paths.cache {
            engine.cache().save(p).with_context(|| format!("writing cache {}", p.display()))?;
            info!(entries = engine.cache().len(), path = %p.display(), "cache saved");
        }
        Ok(())
    }

    fn prompts(&self) -> Result<Arc<PromptLibrary>> {
        Ok(Arc::new(match &self.cfg.paths.prompts_dir {
            Some(dir) => PromptLibrary::load_dir(dir)?,
            None => PromptLibrary::default(),
        }))
    }

    fn providers(&self, queries: &QuerySet) -> Providers {
        if self.offline {
            return Providers::offline(&self.cfg, queries);
        }
        online_providers(&self.cfg)
    }

    fn engine(&self, corpus: Arc<Corpus>, queries: &QuerySet) -> Result<Engine> {
        let mut engine = Engine::new(corpus.clone(), self.providers(queries), self.cache()?, self.prompts()?)
            .with_tokenizer(self.cfg.tokenizer);
        if let Some(p) = &self.cfg.paths.contextual_corpus {
            if p.exists() {
                let ctx =
                    load_corpus(BufReader::new(File::open(p)?)).with_context(|| format!("loading {}", p.display()))?;
                engine = engine.with_contextual_corpus(Arc::new(ctx))?;
            }
        }
        Ok(engine)
    }
}

/// Stands in for a provider whose credentials are missing, so methods that
/// never call it still run.
struct Unavailable(String);

impl EmbeddingProvider for Unavailable {
    fn model_id(&self) -> &str {
        "unavailable"
    }
    fn dimension(&self) -> usize {
        0
    }
    fn embed(&self, _: &[String]) -> ragbench_core::Result<Vec<Vec<f32>>> {
        Err(ragbench_core::Error::InvalidParam(self.0.clone()))
    }
}

impl CompletionProvider for Unavailable {
    fn model_id(&self) -> &str {
        "unavailable"
    }
    fn complete(&self, _: &str, _: f64, _: u32) -> ragbench_core::Result<String> {
        Err(ragbench_core::Error::InvalidParam(self.0.clone()))
    }
}

impl RerankProvider for Unavailable {
    fn model_id(&self) -> &str {
        "unavailable"
    }
    fn rerank(&self, _: &str, _: &[RerankDoc<'_>], _: usize) -> ragbench_core::Result<Vec<RerankHit>> {
        Err(ragbench_core::Error::InvalidParam(self.0.clone()))
    }
}

fn online_providers(cfg: &ExperimentConfig) -> Providers {
    let ledger = CallLedger::new();
    let clock: Arc<SystemClock> = Arc::new(SystemClock::default());
    let policy = &cfg.providers.policy;
    let b = &cfg.providers;

    let embedder: Arc<dyn EmbeddingProvider> = match Credentials::from_env("EMBED") {
        Ok(c) => Arc::new(Metered::new(
            Resilient::new(HttpEmbedder::new(c, &b.embed_model, b.embed_dimension), policy.clone(), clock.clone())
                .expect("policy validated"),
            ledger.clone(),
        )),
        Err(e) => Arc::new(Unavailable(e.to_string())),
    };
    let completion: Arc<dyn CompletionProvider> = match Credentials::from_env("LLM") {
        Ok(c) => Arc::new(Metered::new(
            Resilient::new(HttpCompletion::new(c, &b.llm_model), policy.clone(), clock.clone())
                .expect("policy validated"),
            ledger.clone(),
        )),
        Err(e) => Arc::new(Unavailable(e.to_string())),
    };
    let reranker: Arc<dyn RerankProvider> = match Credentials::from_env("RERANK") {
        Ok(c) => Arc::new(Metered::new(
            Resilient::new(HttpReranker::new(c, &b.rerank_model), policy.clone(), clock.clone())
                .expect("policy validated"),
            ledger.clone(),
        )),
        Err(e) => Arc::new(Unavailable(e.to_string())),
    };
    Providers { embedder, completion, reranker, ledger }
}

fn parse_methods(names: &[String], default: Method) -> Result<Vec<Method>> {
    if names.is_empty() {
        return Ok(vec![default]);
    }
    names.iter().map(|n| Ok(n.trim().parse::<Method>()?)).collect()
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> ragbench_core::Result<()>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    f(&mut out)?;
    out.flush()?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_ingest(ctx: &Ctx, write: bool) -> Result<()> {
    let corpus = ctx.corpus()?;
    let queries = ctx.queries_if_any(&corpus)?;
    let stats = corpus_stats(&corpus)?;
    println!("documents: {}  mean tokens: {:.1}", stats.count, stats.mean_token_count);
    for (subset, n) in &stats.per_subset {
        println!("  {subset:<10} {n}");
    }
    println!("queries: {}", queries.len());
    if write {
        write_with(&ctx.out("corpus.jsonl")?, |w| corpus.write_jsonl(w))?;
        if !queries.is_empty() {
            write_with(&ctx.out("queries.jsonl")?, |w| queries.write_jsonl(w))?;
        }
    }
    Ok(())
}

fn cmd_contextualize(ctx: &Ctx, out: Option<PathBuf>) -> Result<()> {
    let corpus = ctx.corpus()?;
    let queries = ctx.queries_if_any(&corpus)?;
    let engine = ctx.engine(corpus, &queries)?;
    let contextual = engine.contextual_corpus(&ctx.cfg)?;
    let path = match out.or_else(|| ctx.cfg.paths.contextual_corpus.clone()) {
        Some(p) => p,
        None => ctx.out("corpus.contextual.jsonl")?,
    };
    write_with(&path, |w| contextual.write_jsonl(w))?;
    print_ledger(&engine);
    Ok(())
}

fn cmd_embed(ctx: &Ctx, contextual: bool) -> Result<()> {
    if ctx.cfg.paths.cache.is_none() {
        bail!("`embed` needs paths.cache in the config to store vectors");
    }
    let corpus = ctx.corpus()?;
    let queries = ctx.queries_if_any(&corpus)?;
    let engine = ctx.engine(corpus, &queries)?;
    let index = engine.vector_index(false, &ctx.cfg)?;
    println!("embedded {} documents (dimension {})", index.len(), index.dimension());
    if contextual {
        let index = engine.vector_index(true, &ctx.cfg)?;
        println!("embedded {} contextualized documents", index.len());
    }
    ctx.save_cache(&engine)?;
    print_ledger(&engine);
    Ok(())
}

fn cmd_index(ctx: &Ctx, out: Option<PathBuf>) -> Result<()> {
    let corpus = ctx.corpus()?;
    let index = LexicalIndex::build(&corpus, ctx.cfg.tokenizer)?;
    println!("indexed {} documents, {} terms, avgdl {:.1}", index.num_docs(), index.vocabulary_size(), index.avgdl());
    let path = match out {
        Some(p) => p,
        None => ctx.out("bm25_index.json")?,
    };
    write_with(&path, |w| index.save(w))
}

fn cmd_run(ctx: &Ctx, methods: &[String], metric: &str) -> Result<()> {
    let methods = parse_methods(methods, ctx.cfg.method)?;
    let corpus = ctx.corpus()?;
    let queries = ctx.queries(&corpus)?;
    let engine = ctx.engine(corpus, &queries)?;
    let result = run_methods(&ctx.cfg, &methods, &engine, &queries);
    ctx.save_cache(&engine)?;
    let report = result?;
    print!("{}", summary_table(&report));
    report.save(ctx.out("report.json")?)?;
    println!("wrote {}", ctx.out("report.json")?.display());
    write_with(&ctx.out("per_query.csv")?, |w| write_per_query_csv(&report, w))?;
    write_with(&ctx.out("recall_curve.csv")?, |w| write_recall_curve_csv(&report, w))?;
    if report.methods.len() > 1 {
        let rows = compare_methods(&[report], metric, ctx.cfg.bootstrap_samples, ctx.cfg.seed)?;
        print!("\n{}", significance_table(&rows));
        write_with(&ctx.out("significance.csv")?, |w| write_significance_csv(&rows, w))?;
    }
    Ok(())
}

fn cmd_generate(ctx: &Ctx, methods: &[String], top_k: Option<usize>) -> Result<()> {
    let methods = parse_methods(methods, ctx.cfg.method)?;
    let corpus = ctx.corpus()?;
    let queries = ctx.queries(&corpus)?;
    let engine = ctx.engine(corpus, &queries)?;
    let mut records = Vec::new();
    for m in methods {
        let mut cfg = ctx.cfg.clone().with_method(m);
        if let Some(k) = top_k {
            cfg.generation_top_k = k;
        }
        records.extend(answer_questions(&cfg, &engine, &queries)?);
    }
    ctx.save_cache(&engine)?;
    print!("{}", generation_table(&summarize_generation(&records)));
    write_with(&ctx.out("generation.csv")?, |w| write_generation_csv(&records, w))?;
    print_ledger(&engine);
    Ok(())
}

fn cmd_eval(ctx: &Ctx, path: &Path, check: bool) -> Result<()> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let report = RunReport::from_json(&text)?.regenerate();
    print!("{}", summary_table(&report));
    if check {
        if report.to_json()? != text {
            bail!("regenerated report differs from {}", path.display());
        }
        println!("regeneration is byte-identical");
    }
    write_with(&ctx.out("per_query.csv")?, |w| write_per_query_csv(&report, w))?;
    write_with(&ctx.out("recall_curve.csv")?, |w| write_recall_curve_csv(&report, w))
}

fn cmd_compare(ctx: &Ctx, paths: &[PathBuf], metric: &str) -> Result<()> {
    let reports = paths
        .iter()
        .map(|p| RunReport::load(p).with_context(|| format!("loading {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let rows = compare_methods(&reports, metric, ctx.cfg.bootstrap_samples, ctx.cfg.seed)?;
    print!("{}", significance_table(&rows));
    write_with(&ctx.out("significance.csv")?, |w| write_significance_csv(&rows, w))
}

fn cmd_sweep(ctx: &Ctx, axis: &str, values: &[f64]) -> Result<()> {
    let axis: SweepAxis = axis.parse()?;
    let corpus = ctx.corpus()?;
    let queries = ctx.queries(&corpus)?;
    let engine = ctx.engine(corpus, &queries)?;
    let result = sweep(&ctx.cfg, axis, values, &engine, &queries);
    ctx.save_cache(&engine)?;
    let result = result?;
    println!("{:<12} recall@5  mrr@3", axis.to_string());
    let r5 = result.series("recall@5")?;
    let m3 = result.series("mrr@3").unwrap_or_default();
    for (i, (v, r)) in r5.iter().enumerate() {
        let m = m3.get(i).map_or("-".to_string(), |(_, m)| format!("{m:.3}"));
        println!("{v:<12} {r:.3}     {m}");
    }
    write_with(&ctx.out("sweep.csv")?, |w| write_sweep_csv(&result, w))?;
    let path = ctx.out("sweep.json")?;
    fs::write(&path, serde_json::to_string_pretty(&result)?)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_failures(ctx: &Ctx, path: &Path, method: &str, n: usize, no_categorize: bool) -> Result<()> {
    let report = RunReport::load(path).with_context(|| format!("loading {}", path.display()))?;
    let result = report.method(method)?;
    let mut cases = sample_failures(result, n, ctx.cfg.seed);
    println!("{} failures sampled from {} queries", cases.len(), result.queries.len());
    if !no_categorize && !cases.is_empty() {
        let corpus = ctx.corpus()?;
        let queries = ctx.queries(&corpus)?;
        let providers = ctx.providers(&queries);
        let (done, hist) = categorize_all(providers.completion.as_ref(), &cases, &queries, &corpus);
        cases = done;
        for (category, count) in hist {
            println!("  {:<26} {count}", category.as_str());
        }
    }
    let out = ctx.out("failures.json")?;
    fs::write(&out, serde_json::to_string_pretty(&cases)?)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn print_ledger(engine: &Engine) {
    for (key, t) in engine.providers().ledger.summary() {
        println!("calls {key}: {} ({} items)", t.calls, t.items);
    }
}

fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx::new(&cli)?;
    match cli.command {
        Command::Ingest { write } => cmd_ingest(&ctx, write),
        Command::Contextualize { out } => cmd_contextualize(&ctx, out),
        Command::Embed { contextual } => cmd_embed(&ctx, contextual),
        Command::Index { out } => cmd_index(&ctx, out),
        Command::Run { methods, metric } => cmd_run(&ctx, &methods, &metric),
        Command::Generate { methods, top_k } => cmd_generate(&ctx, &methods, top_k),
        Command::Eval { report, check } => cmd_eval(&ctx, &report, check),
        Command::Compare { reports, metric } => cmd_compare(&ctx, &reports, &metric),
        Command::Sweep { axis, values } => cmd_sweep(&ctx, &axis, &values),
        Command::Failures { report, method, n, no_categorize } => {
            cmd_failures(&ctx, &report, &method, n, no_categorize)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = EnvFilter::try_from_env("RAGBENCH_LOG").unwrap_or_else(|_| EnvFilter::new(level));
    tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
