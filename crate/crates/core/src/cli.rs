//! The `recsys` command line.
//!
//! Exit codes: `0` success, `1` domain or I/O failure (unknown token, parse
//! error, network abort), `2` usage error. Results go to standard output,
//! diagnostics to standard error.

use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::evaluate::{cross_evaluate, export_frame, summary_stats, ExportFormat};
use crate::index::Index;
use crate::ingest::{
    self, fetch_assets, load_collection, FetchConfig, InputFormat, SnapshotStore, SystemClock, UreqTransport,
    API_KEY_ENV,
};
use crate::model::{parse_token_ref, Collection, Scope};
use crate::rarity::{RarityReport, TraitFrequencyTable};
use crate::recommend::{recommend, render_json, render_table, ModelSelection, DEFAULT_K};

#[derive(Debug, Parser)]
#[command(name = "recsys", version, about = "Trait-similarity and trait-rarity recommendations for NFT collections")]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Download a collection from an OpenSea-compatible assets API.
    Fetch(FetchArgs),
    /// Convert a JSON dump into a collection directory.
    Ingest(IngestArgs),
    /// Build a query index from one or more collection directories.
    Index(IndexArgs),
    /// Top-k recommendations for one token.
    Recommend(RecommendArgs),
    /// Compare both models for one token and export the frame.
    Evaluate(EvaluateArgs),
    /// Export per-token rarity scores as CSV.
    Rarity(RarityArgs),
    /// Serve the read-only HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct FetchArgs {
    #[arg(long)]
    pub api_base: String,
    #[arg(long)]
    pub contract: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub page_size: usize,
    /// Requests per second.
    #[arg(long, default_value_t = 2.0)]
    pub rate: f64,
    #[arg(long, default_value_t = 5)]
    pub max_retries: u32,
    /// Sent as X-API-KEY.
    #[arg(long, env = API_KEY_ENV, hide_env_values = true)]
    pub api_key: Option<String>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// opensea-assets or erc721-metadata
    #[arg(long)]
    pub format: InputFormat,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    /// Collection directory (or collection.json); repeat to merge collections.
    #[arg(long, required = true)]
    pub collection: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// local or cross
    #[arg(long, default_value = "local")]
    pub scope: Scope,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Json,
    Table,
}

#[derive(Debug, Args)]
pub struct RecommendArgs {
    #[arg(long)]
    pub index: PathBuf,
    /// <contract>-<token id>
    #[arg(long = "ref")]
    pub reference: String,
    /// traits, rarity or both
    #[arg(long, default_value = "both")]
    pub model: ModelSelection,
    #[arg(short, default_value_t = DEFAULT_K)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long = "ref")]
    pub reference: String,
    #[arg(short, default_value_t = DEFAULT_K)]
    pub k: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// csv or json
    #[arg(long, default_value = "csv")]
    pub format: ExportFormat,
}

#[derive(Debug, Args)]
pub struct RarityArgs {
    #[arg(long)]
    pub collection: PathBuf,
    /// CSV with reference_id,total_rarity
    #[arg(long)]
    pub out: PathBuf,
    /// Optional long-format CSV with reference_id,trait,rarity
    #[arg(long)]
    pub per_trait: Option<PathBuf>,
    #[arg(long, default_value = "local")]
    pub scope: Scope,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: IpAddr,
    /// Serve a built UI from this directory on unmatched paths.
    #[arg(long = "static")]
    pub static_dir: Option<PathBuf>,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn domain(e: impl std::fmt::Display) -> Self {
        Self {
            code: 1,
            message: e.to_string(),
        }
    }

    fn usage(e: impl std::fmt::Display) -> Self {
        Self {
            code: 2,
            message: e.to_string(),
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .try_init();
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    2
                }
            };
        }
    };
    init_logging(cli.verbose);
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes()).map_err(Failure::domain)
}

fn emit_json(out: &mut dyn Write, value: serde_json::Value) -> Result<(), Failure> {
    emit(out, &format!("{value}\n"))
}

pub fn execute(command: Command, out: &mut dyn Write) -> Result<(), Failure> {
    match command {
        Command::Fetch(a) => {
            let cfg = FetchConfig {
                page_size: a.page_size,
                rate_limit: a.rate,
                max_retries: a.max_retries,
                api_key: a.api_key,
                ..FetchConfig::new(a.api_base, a.contract)
            };
            cfg.validate().map_err(Failure::usage)?;
            let store = SnapshotStore::open(&a.out).map_err(Failure::domain)?;
            let collection = fetch_assets(&cfg, &store, &UreqTransport::default(), &SystemClock::default())
                .map_err(Failure::domain)?;
            let path = ingest::save_collection_dir(&a.out, &collection).map_err(Failure::domain)?;
            emit_json(
                out,
                serde_json::json!({"tokens": collection.total_supply(), "collection": path}),
            )
        }
        Command::Ingest(a) => {
            let collection = load_collection(&a.input, a.format).map_err(Failure::domain)?;
            let path = ingest::save_collection_dir(&a.out, &collection).map_err(Failure::domain)?;
            emit_json(
                out,
                serde_json::json!({"tokens": collection.total_supply(), "collection": path}),
            )
        }
        Command::Index(a) => {
            let mut loaded = a
                .collection
                .iter()
                .map(|p| ingest::load_collection_dir(p).map_err(|e| Failure::domain(format!("{}: {e}", p.display()))))
                .collect::<Result<Vec<_>, _>>()?
                .into_iter();
            let first = loaded.next().expect("clap requires one collection");
            let collection = Collection::merge(first, loaded).map_err(Failure::domain)?;
            let index = Index::build(&collection, a.scope).map_err(Failure::domain)?;
            index.save(&a.out).map_err(Failure::domain)?;
            emit_json(
                out,
                serde_json::json!({
                    "tokens": index.len(),
                    "terms": index.vocabulary().len(),
                    "scope": index.scope(),
                    "index": a.out,
                }),
            )
        }
        Command::Recommend(a) => {
            let reference = parse_ref(&a.reference)?;
            let index = Index::load(&a.index).map_err(Failure::domain)?;
            let lists = recommend(&reference, a.model, a.k, &index).map_err(Failure::domain)?;
            match a.format {
                OutputFormat::Json => emit(out, &(render_json(&lists) + "\n")),
                OutputFormat::Table => emit(out, &render_table(&lists)),
            }
        }
        Command::Evaluate(a) => {
            let reference = parse_ref(&a.reference)?;
            let index = Index::load(&a.index).map_err(Failure::domain)?;
            let frame = cross_evaluate(&reference, a.k, &index).map_err(Failure::domain)?;
            export_frame(&frame, a.format, &a.out).map_err(Failure::domain)?;
            let summary: serde_json::Map<String, serde_json::Value> = summary_stats(&frame)
                .into_iter()
                .map(|(source, stats)| (source.as_str().to_string(), serde_json::json!(stats)))
                .collect();
            emit_json(
                out,
                serde_json::json!({"reference": reference, "rows": frame.rows.len(), "out": a.out, "summary": summary}),
            )
        }
        Command::Rarity(a) => {
            let collection = ingest::load_collection_dir(&a.collection).map_err(Failure::domain)?;
            let table = TraitFrequencyTable::build(&collection, a.scope);
            let report = RarityReport::build(&collection, &table).map_err(Failure::domain)?;
            let create = |p: &PathBuf| {
                std::fs::File::create(p).map_err(|e| Failure::domain(format!("{}: {e}", p.display())))
            };
            report.write_totals_csv(create(&a.out)?).map_err(Failure::domain)?;
            if let Some(p) = &a.per_trait {
                report.write_per_trait_csv(create(p)?).map_err(Failure::domain)?;
            }
            emit_json(out, serde_json::json!({"tokens": report.per_token.len(), "out": a.out}))
        }
        Command::Serve(a) => {
            let index = Arc::new(Index::load(&a.index).map_err(Failure::domain)?);
            let addr = SocketAddr::new(a.host, a.port);
            let runtime = tokio::runtime::Runtime::new().map_err(Failure::domain)?;
            runtime
                .block_on(crate::server::serve(index, addr, a.static_dir))
                .map_err(Failure::domain)
        }
    }
}

fn parse_ref(raw: &str) -> Result<crate::model::TokenRef, Failure> {
    parse_token_ref(raw).map_err(|e| Failure::domain(format!("invalid token reference {raw:?}: {e}")))
}
