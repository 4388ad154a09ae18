//! `atlas` command line. Machine-readable JSON goes to stdout, diagnostics
//! to stderr.

use std::ffi::OsString;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use atlas_core::surprise::run_surprise_range;
use atlas_core::{MetricKind, ModelSpec, NaiveDate};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::config::ApiConfig;
use crate::frames::FrameFormat;
use crate::ingest::CdcColumns;
use crate::report::{IngestReport, Source};
use crate::store::Store;

pub const EXIT_OK: u8 = 0;
pub const EXIT_ENV: u8 = 1;
pub const EXIT_PARTIAL: u8 = 2;
pub const EXIT_EMPTY: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "atlas", version, about = "Surprise-weighted county health atlas")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a source CSV and upsert it into the store.
    Ingest(IngestArgs),
    /// Compute surprise frames for a date range and write them to a file.
    Compute(ComputeArgs),
    /// Run the HTTP API.
    Serve(ServeArgs),
    /// Dump the current snapshot.
    Export(ExportArgs),
    /// Generate the demo fixture set.
    Demo(DemoArgs),
}

#[derive(Debug, Args)]
pub struct StoreArgs {
    /// Store directory.
    #[arg(long, env = "ATLAS_DATA_DIR", default_value = "atlas-data")]
    pub data_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long, value_enum)]
    pub source: Source,
    #[arg(long)]
    pub file: PathBuf,
    /// Load nothing if any row is rejected.
    #[arg(long)]
    pub strict: bool,
    /// JSON column mapping for CDC exports with non-default headers.
    #[arg(long)]
    pub columns: Option<PathBuf>,
    #[command(flatten)]
    pub store: StoreArgs,
}

#[derive(Debug, Args)]
pub struct ComputeArgs {
    #[arg(long)]
    pub metric: MetricKind,
    /// First date (defaults to the first date with data).
    #[arg(long)]
    pub from: Option<NaiveDate>,
    /// Last date (defaults to the last date with data).
    #[arg(long)]
    pub to: Option<NaiveDate>,
    /// Comma-separated model names (defaults to the full catalog).
    #[arg(long)]
    pub models: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = FrameFormat::Jsonl)]
    pub format: FrameFormat,
    #[command(flatten)]
    pub store: StoreArgs,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long, value_enum, default_value_t = ExportFormat::Csv)]
    pub format: ExportFormat,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub store: StoreArgs,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = crate::demo::DEFAULT_SEED)]
    pub seed: u64,
    /// Also ingest the generated files into `<out>/data`.
    #[arg(long)]
    pub ingest: bool,
}

/// Parse `args` and run. Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ENV } else { EXIT_OK });
        }
    };
    init_logging(matches!(cli.command, Command::Serve(_)));
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ENV)
        }
    }
}

fn init_logging(serving: bool) {
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(if serving { "info" } else { "warn" }));
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(io::stderr)
        .try_init();
}

pub fn run(command: Command) -> anyhow::Result<u8> {
    match command {
        Command::Ingest(a) => ingest(a),
        Command::Compute(a) => compute(a),
        Command::Serve(a) => serve(a),
        Command::Export(a) => export(a),
        Command::Demo(a) => demo(a),
    }
}

fn print_json(value: &impl serde::Serialize) -> anyhow::Result<()> {
    let mut out = io::stdout().lock();
    writeln!(out, "{}", crate::canonical::to_string(value))?;
    Ok(())
}

/// Parse one file into `store`. With `strict`, a file with rejections is
/// not loaded at all.
pub fn ingest_file(
    store: &Store,
    source: Source,
    file: &Path,
    columns: &CdcColumns,
    strict: bool,
) -> anyhow::Result<IngestReport> {
    let input = fs::File::open(file).with_context(|| format!("cannot open {}", file.display()))?;
    let (records, report) = crate::pipeline::parse_source(source, io::BufReader::new(input), columns)
        .with_context(|| format!("{}", file.display()))?;
    if strict && !report.is_clean() {
        tracing::warn!(rejected = report.rejected_total(), "strict mode: nothing loaded");
        return Ok(report);
    }
    let version = store.upsert(&records)?;
    tracing::info!(version, records = records.len(), "upserted");
    Ok(report)
}

fn ingest(a: IngestArgs) -> anyhow::Result<u8> {
    let columns = match &a.columns {
        None => CdcColumns::default(),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
            CdcColumns::from_json(&text).with_context(|| format!("{}", p.display()))?
        }
    };
    if !a.file.is_file() {
        bail!("no such file: {}", a.file.display());
    }
    let store = Store::open(&a.store.data_dir)?;
    let report = ingest_file(&store, a.source, &a.file, &columns, a.strict)?;
    print_json(&report)?;
    Ok(if report.is_clean() { EXIT_OK } else { EXIT_PARTIAL })
}

fn compute(a: ComputeArgs) -> anyhow::Result<u8> {
    let store = Store::open_existing(&a.store.data_dir)?;
    let snapshot = store.snapshot();
    let models = match a.models.as_deref().filter(|s| !s.trim().is_empty()) {
        Some(list) => ModelSpec::parse_list(list)?,
        None => crate::service::catalog(&snapshot),
    };
    let bounds = snapshot.metric_bounds(a.metric.surprise_basis());
    let (Some(from), Some(to)) = (a.from.or(bounds.map(|b| b.0)), a.to.or(bounds.map(|b| b.1))) else {
        eprintln!("no {} data in store", a.metric);
        return Ok(EXIT_EMPTY);
    };
    let frames = run_surprise_range(a.metric, from, to, &models, &snapshot)?;
    if frames.is_empty() {
        eprintln!("no {} data between {from} and {to}", a.metric);
        return Ok(EXIT_EMPTY);
    }
    let file = fs::File::create(&a.out).with_context(|| format!("cannot create {}", a.out.display()))?;
    let mut out = BufWriter::new(file);
    match a.format {
        FrameFormat::Jsonl => crate::frames::write_jsonl(&frames, &mut out)?,
        FrameFormat::Csv => crate::frames::write_csv(&frames, &mut out)?,
    }
    out.flush()?;
    print_json(&json!({
        "metric": a.metric,
        "from": from,
        "to": to,
        "models": models.iter().map(|m| &m.name).collect::<Vec<_>>(),
        "frames": frames.len(),
        "out": a.out,
        "version": snapshot.version(),
    }))?;
    Ok(EXIT_OK)
}

fn serve(a: ServeArgs) -> anyhow::Result<u8> {
    let config = ApiConfig::load(&a.config)?;
    // Fail on a bad boundary file before binding the port.
    config.boundaries()?;
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(crate::service::serve(config, shutdown_signal()))?;
    Ok(EXIT_OK)
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
            Err(_) => std::future::pending().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
}

fn export(a: ExportArgs) -> anyhow::Result<u8> {
    let store = Store::open_existing(&a.store.data_dir)?;
    let snapshot = store.snapshot();
    let file = fs::File::create(&a.out).with_context(|| format!("cannot create {}", a.out.display()))?;
    let mut out = BufWriter::new(file);
    match a.format {
        ExportFormat::Csv => crate::store::export_csv(&snapshot, &mut out)?,
        ExportFormat::Json => out.write_all(crate::store::export_json(&snapshot).as_bytes())?,
    }
    out.flush()?;
    print_json(&json!({ "out": a.out, "version": snapshot.version(), "series": snapshot.iter_series().count() }))?;
    Ok(EXIT_OK)
}

fn demo(a: DemoArgs) -> anyhow::Result<u8> {
    let summary = crate::demo::write_demo(&a.out, a.seed)
        .with_context(|| format!("cannot write demo into {}", a.out.display()))?;
    let mut reports = Vec::new();
    if a.ingest {
        let store = Store::open(a.out.join(crate::demo::DATA_DIR))?;
        for (source, file) in crate::demo::SOURCES {
            reports.push(ingest_file(
                &store,
                source,
                &a.out.join(file),
                &CdcColumns::default(),
                false,
            )?);
        }
    }
    let clean = reports.iter().all(IngestReport::is_clean);
    print_json(&json!({ "demo": summary, "ingested": reports }))?;
    Ok(if clean { EXIT_OK } else { EXIT_PARTIAL })
}
