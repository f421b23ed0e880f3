//! `termrec`: harvest, build, query and serve from the command line.
//!
//! Exit codes: 0 success, 1 other failure, 2 OAI-PMH protocol error (or bad
//! usage), 3 transport error, 4 corpus or model build failure, 5 empty
//! query, 6 configuration or bind failure of `serve`.

mod table;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use termrec_core::biblio::Field;
use termrec_core::corpus::{build_corpus, parse_vocabulary_upload, to_dc_record, DcRecord, SubjectSplitConfig};
use termrec_core::engine::{cloud_weights, expand_query, recommend, EngineError, IndexConfig, Metric, ModelSnapshot};
use termrec_core::oai::{parse_datestamp, OaiClient, OaiEndpoint, OaiError, RetryPolicy};
use termrec_core::text::{AnalyzerConfig, Language};
use termrec_core::wire::{CloudResponse, ExpandResponse, RecommendResponse, WireBody};
use termrec_service::app::{coword_response, top_terms_response, trend_response};
use termrec_service::{AppState, Config, LogNotifier};

use table::{num, text, Table};

const EXIT_FAILURE: u8 = 1;
const EXIT_PROTOCOL: u8 = 2;
const EXIT_TRANSPORT: u8 = 3;
const EXIT_BUILD: u8 = 4;
const EXIT_EMPTY_QUERY: u8 = 5;
const EXIT_SERVE: u8 = 6;

#[derive(Debug, Parser)]
#[command(name = "termrec", version, about = "Search term recommendation from OAI-PMH metadata")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Harvest Dublin Core records into a line-delimited JSON archive.
    Harvest(HarvestArgs),
    /// Build a model file from an archive.
    Build(BuildArgs),
    /// Recommend controlled terms for a query.
    Recommend(RecommendArgs),
    /// Expand a query with its top recommendations.
    Expand(ExpandArgs),
    /// Weighted terms for a tag cloud.
    Cloud(CloudArgs),
    /// Bibliometric reports.
    Biblio {
        #[command(subcommand)]
        report: BiblioCommand,
    },
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct HarvestArgs {
    /// OAI-PMH base URL.
    #[arg(long)]
    url: String,
    #[arg(long, short)]
    out: PathBuf,
    /// Only records with a datestamp strictly after this time.
    #[arg(long)]
    since: Option<String>,
    #[arg(long)]
    set: Option<String>,
    /// Attempts per request for 5xx, 429 and connection failures.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
    max_attempts: u32,
}

#[derive(Debug, Args)]
struct BuildArgs {
    #[arg(long)]
    archive: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value = "en")]
    language: Language,
    /// Controlled vocabulary, one term per line.
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..=5))]
    min_cooccurrence: u32,
    #[arg(long, default_value = "jaccard")]
    metric: Metric,
    /// Keep trailing "(1234)" classification codes on subject terms.
    #[arg(long)]
    keep_codes: bool,
    /// Extra stop words file, one per line.
    #[arg(long)]
    stopwords: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long, short)]
    model: PathBuf,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Debug, Args)]
struct QueryArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    term: String,
    /// Defaults to the metric the model was built with.
    #[arg(long)]
    metric: Option<Metric>,
}

#[derive(Debug, Args)]
struct RecommendArgs {
    #[command(flatten)]
    query: QueryArgs,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..=100))]
    limit: u32,
}

#[derive(Debug, Args)]
struct ExpandArgs {
    #[command(flatten)]
    query: QueryArgs,
    #[arg(long, short, default_value_t = 5, value_parser = clap::value_parser!(u32).range(0..=20))]
    n: u32,
}

#[derive(Debug, Args)]
struct CloudArgs {
    #[command(flatten)]
    query: QueryArgs,
    #[arg(long, short, default_value_t = 30, value_parser = clap::value_parser!(u32).range(1..=100))]
    k: u32,
}

#[derive(Debug, Subcommand)]
enum BiblioCommand {
    /// Most frequent terms by document frequency.
    TopTerms {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value = "subject")]
        field: Field,
        #[arg(long, short, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..=100))]
        k: u32,
    },
    /// Strongest free-term/subject co-occurrences.
    Coword {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, short, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..=100))]
        k: u32,
    },
    /// Documents per year for one term.
    Trend {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        term: String,
        #[arg(long, default_value = "subject")]
        field: Field,
    },
}

#[derive(Debug, Args)]
struct ServeArgs {
    /// key = value configuration file; TERMREC_* variables override it.
    #[arg(long, short)]
    config: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl std::fmt::Display) -> Failure {
    Failure { code, message: message.to_string() }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let default_level = if matches!(cli.command, Command::Serve(_)) { "info" } else { "warn" };
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default_level)),
        )
        .init();

    let result = match cli.command {
        Command::Harvest(args) => harvest(args),
        Command::Build(args) => build(args),
        Command::Recommend(args) => cmd_recommend(args),
        Command::Expand(args) => cmd_expand(args),
        Command::Cloud(args) => cmd_cloud(args),
        Command::Biblio { report } => biblio(report),
        Command::Serve(args) => serve(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("termrec: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn runtime() -> Result<tokio::runtime::Runtime, Failure> {
    tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(|e| fail(EXIT_FAILURE, e))
}

fn oai_exit(e: &OaiError) -> u8 {
    if e.is_protocol() {
        EXIT_PROTOCOL
    } else {
        EXIT_TRANSPORT
    }
}

fn harvest(args: HarvestArgs) -> Outcome {
    let since = args
        .since
        .as_deref()
        .map(|s| parse_datestamp(s).ok_or_else(|| fail(EXIT_PROTOCOL, format!("invalid --since '{s}'"))))
        .transpose()?;
    let mut endpoint = OaiEndpoint::new(&args.url).map_err(|e| fail(oai_exit(&e), e))?;
    if let Some(set) = args.set {
        endpoint = endpoint.with_set(set);
    }
    let client = OaiClient::new(RetryPolicy { max_attempts: args.max_attempts, ..RetryPolicy::default() });
    let result = runtime()?.block_on(async {
        // Identify tells us the datestamp granularity for `from`.
        if since.is_some() {
            let identity = client.identify(&endpoint).await?;
            endpoint.granularity = identity.granularity;
        }
        client.harvest(&endpoint, since).await
    });
    let result = result.map_err(|e| fail(oai_exit(&e), e))?;

    let file = File::create(&args.out).map_err(|e| fail(EXIT_FAILURE, format!("{}: {e}", args.out.display())))?;
    let mut out = BufWriter::new(file);
    let mut written = 0usize;
    for raw in &result.records {
        let Ok(record) = to_dc_record(raw) else {
            continue;
        };
        serde_json::to_writer(&mut out, &record).map_err(|e| fail(EXIT_FAILURE, e))?;
        out.write_all(b"\n").map_err(|e| fail(EXIT_FAILURE, e))?;
        written += 1;
    }
    out.flush().map_err(|e| fail(EXIT_FAILURE, e))?;
    println!("{written} records");
    Ok(())
}

fn read_archive(path: &Path) -> Result<Vec<DcRecord>, Failure> {
    let file = File::open(path).map_err(|e| fail(EXIT_FAILURE, format!("{}: {e}", path.display())))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| fail(EXIT_FAILURE, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line)
            .map_err(|e| fail(EXIT_FAILURE, format!("{}:{}: {e}", path.display(), i + 1)))?;
        records.push(record);
    }
    Ok(records)
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| fail(EXIT_FAILURE, format!("{}: {e}", path.display())))
}

fn build(args: BuildArgs) -> Outcome {
    let records = read_archive(&args.archive)?;
    let vocabulary = args
        .vocab
        .as_deref()
        .map(|p| parse_vocabulary_upload(&read_text(p)?).map_err(|e| fail(EXIT_BUILD, e)))
        .transpose()?;
    let mut analyzer = AnalyzerConfig::for_language(args.language);
    if let Some(p) = &args.stopwords {
        analyzer.extend_stopwords(&read_text(p)?);
    }
    let split = SubjectSplitConfig { strip_codes: !args.keep_codes };
    if !args.metric.is_available() {
        return Err(fail(EXIT_BUILD, EngineError::ModuleUnavailable(args.metric)));
    }
    let corpus = build_corpus(&records, &analyzer, &split, vocabulary.as_ref()).map_err(|e| fail(EXIT_BUILD, e))?;
    let repository = args.archive.file_stem().map_or_else(|| "local".to_string(), |s| s.to_string_lossy().into_owned());
    let snapshot = ModelSnapshot::build(
        repository,
        corpus,
        analyzer,
        IndexConfig { min_cooccurrence: args.min_cooccurrence },
        args.metric,
    )
    .map_err(|e| fail(EXIT_BUILD, e))?;
    snapshot.save(&args.out).map_err(|e| fail(EXIT_FAILURE, format!("{}: {e}", args.out.display())))?;
    println!(
        "{} documents, {} vocabulary terms, {} pairs",
        snapshot.index.n(),
        snapshot.vocabulary().len(),
        snapshot.index.pair_len()
    );
    Ok(())
}

fn load(args: &ModelArgs) -> Result<ModelSnapshot, Failure> {
    ModelSnapshot::load(&args.model).map_err(|e| fail(EXIT_FAILURE, format!("{}: {e}", args.model.display())))
}

fn engine_failure(e: EngineError) -> Failure {
    let code = match e {
        EngineError::EmptyQuery => EXIT_EMPTY_QUERY,
        _ => EXIT_FAILURE,
    };
    fail(code, e)
}

fn emit(format: Format, body: &impl WireBody, table: impl FnOnce() -> Table) {
    match format {
        Format::Json => println!("{}", body.to_json()),
        Format::Table => print!("{}", table().render()),
    }
}

fn cmd_recommend(args: RecommendArgs) -> Outcome {
    let q = &args.query;
    let snap = load(&q.model)?;
    let metric = q.metric.unwrap_or(snap.default_metric);
    let recs = recommend(&q.term, &snap, metric, args.limit as usize).map_err(engine_failure)?;
    emit(q.model.format, &RecommendResponse::new(&q.term, metric, &snap, &recs), || {
        let mut t = Table::new(vec!["name", "confidence", "raw_score"]);
        for r in &recs {
            t.row(vec![text(&r.name), num(r.confidence), num(r.raw_score)]);
        }
        t
    });
    Ok(())
}

fn cmd_expand(args: ExpandArgs) -> Outcome {
    let q = &args.query;
    let snap = load(&q.model)?;
    let metric = q.metric.unwrap_or(snap.default_metric);
    let expanded = expand_query(&q.term, &snap, metric, args.n as usize).map_err(engine_failure)?;
    let body = ExpandResponse::new(&q.term, metric, &snap, expanded.clone());
    emit(q.model.format, &body, || {
        let mut t = Table::new(vec!["term", "source"]);
        for w in &expanded.original {
            t.row(vec![text(w), text("original")]);
        }
        for w in &expanded.added {
            t.row(vec![text(w), text("added")]);
        }
        t
    });
    Ok(())
}

fn cmd_cloud(args: CloudArgs) -> Outcome {
    let q = &args.query;
    let snap = load(&q.model)?;
    let metric = q.metric.unwrap_or(snap.default_metric);
    let terms = cloud_weights(&q.term, &snap, metric, args.k as usize).map_err(engine_failure)?;
    let body = CloudResponse::new(&q.term, metric, &snap, terms);
    emit(q.model.format, &body, || {
        let mut t = Table::new(vec!["name", "confidence", "weight", "bucket"]);
        for e in &body.terms {
            t.row(vec![text(&e.name), num(e.confidence), num(e.weight), num(e.bucket)]);
        }
        t
    });
    Ok(())
}

fn biblio(report: BiblioCommand) -> Outcome {
    match report {
        BiblioCommand::TopTerms { model, field, k } => {
            let snap = load(&model)?;
            let body = top_terms_response(&snap, field, k as usize);
            emit(model.format, &body, || {
                let mut t = Table::new(vec!["term", "df"]);
                for r in &body.terms {
                    t.row(vec![text(&r.term), num(r.df)]);
                }
                t
            });
        }
        BiblioCommand::Coword { model, k } => {
            let snap = load(&model)?;
            let body = coword_response(&snap, k as usize);
            emit(model.format, &body, || {
                let mut t = Table::new(vec!["free", "subject", "count"]);
                for p in &body.pairs {
                    t.row(vec![text(&p.free), text(&p.subject), num(p.count)]);
                }
                t
            });
        }
        BiblioCommand::Trend { model, term, field } => {
            let snap = load(&model)?;
            if term.trim().is_empty() {
                return Err(fail(EXIT_EMPTY_QUERY, EngineError::EmptyQuery));
            }
            let body = trend_response(&snap, &term, field);
            emit(model.format, &body, || {
                let mut t = Table::new(vec!["year", "count"]);
                for b in &body.buckets {
                    t.row(vec![num(b.year), num(b.count)]);
                }
                if body.excluded > 0 {
                    t.row(vec![text("undated"), num(body.excluded)]);
                }
                t
            });
        }
    }
    Ok(())
}

fn serve(args: ServeArgs) -> Outcome {
    let config = Config::load(args.config.as_deref()).map_err(|e| fail(EXIT_SERVE, e))?;
    let rt = runtime()?;
    rt.block_on(async {
        let addr = format!("{}:{}", config.bind, config.port);
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| fail(EXIT_SERVE, format!("cannot listen on {addr}: {e}")))?;
        let local = listener.local_addr().map_err(|e| fail(EXIT_SERVE, e))?;
        let state = AppState::open(config, Arc::new(LogNotifier)).map_err(|e| fail(EXIT_SERVE, e))?;
        println!("listening on http://{local}");
        let _ = std::io::stdout().flush();
        termrec_service::serve(listener, state, shutdown_signal()).await.map_err(|e| fail(EXIT_FAILURE, e))
    })?;
    // Background jobs are abandoned; the next start marks them failed.
    rt.shutdown_timeout(Duration::from_secs(1));
    Ok(())
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
    tracing::info!("shutting down");
}
