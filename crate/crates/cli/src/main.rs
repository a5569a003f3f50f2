//! `monoeval`: monotonicity, latency and quality metrics for simultaneous
//! translation, plus the streaming annotation server.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 on data errors.

mod commands;
mod input;

use std::net::IpAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use monoeval_core::Smoothing;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Data(format!("{}: {e}", path.display()))
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

#[derive(Parser)]
#[command(name = "monoeval", version, about = "Evaluation toolkit for simultaneous translation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Average Anticipation of every sentence pair.
    Aa(AaArgs),
    /// Keep the pairs whose AA is at most a threshold.
    Filter(FilterArgs),
    /// Dataset statistics as a JSON report.
    Stats(StatsArgs),
    /// Average Lagging of streaming logs, as `id<TAB>AL`.
    Al(AlArgs),
    /// Normalized Erasure of retranslation logs, as `id<TAB>NE`.
    Ne(NeArgs),
    /// Corpus BLEU-4 of a hypothesis file against a reference file.
    Bleu(BleuArgs),
    /// Model BLEU divided by full-sentence BLEU.
    Norm(NormArgs),
    /// Relative score change from a high setting to a low one.
    Drop(DropArgs),
    /// BLEU between system and reference partial outputs.
    BleuStream(BleuStreamArgs),
    /// Emit the wait-k schedule as a stream log.
    WaitkPath(WaitkArgs),
    /// Check stream logs for structural and source violations.
    ValidateLog(ValidateArgs),
    /// Run the annotation server.
    Serve(ServeArgs),
    /// Write references and stream logs from an annotation journal.
    Export(ExportArgs),
}

#[derive(Args)]
struct SummaryArgs {
    /// Write per-item TSV here instead of stdout; the JSON summary then goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the JSON summary to this file.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct AaArgs {
    /// Source sentences, one per line, whitespace-tokenized.
    #[arg(long)]
    src: PathBuf,
    /// Target sentences, line-aligned with --src.
    #[arg(long)]
    tgt: PathBuf,
    /// Pharaoh alignments (`i-j` pairs), line-aligned with --src.
    #[arg(long)]
    align: PathBuf,
    /// Report the link-weighted corpus AA as the mean instead of the per-pair mean.
    #[arg(long)]
    link_weighted: bool,
    #[command(flatten)]
    output: SummaryArgs,
}

#[derive(Args)]
struct FilterArgs {
    #[arg(long)]
    src: PathBuf,
    #[arg(long)]
    tgt: PathBuf,
    #[arg(long)]
    align: PathBuf,
    /// Output prefix: writes PREFIX.aa.tsv, PREFIX.kept.src, PREFIX.kept.tgt, PREFIX.stats.json.
    #[arg(long)]
    prefix: String,
    /// Keep pairs with AA at most this value (`inf` keeps every scoreable pair).
    #[arg(long, default_value = "0", value_parser = non_negative)]
    threshold: f64,
    /// Keep a uniform sample of this many eligible pairs.
    #[arg(long, requires = "seed", value_parser = positive)]
    sample: Option<usize>,
    /// Seed for --sample.
    #[arg(long, requires = "sample")]
    seed: Option<u64>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    src: PathBuf,
    #[arg(long)]
    tgt: PathBuf,
    /// Optional Pharaoh alignments; adds AA statistics.
    #[arg(long)]
    align: Option<PathBuf>,
    /// Optional annotation stream logs; adds annotation AL.
    #[arg(long)]
    logs: Option<PathBuf>,
}

#[derive(Args)]
struct AlArgs {
    /// JSONL stream logs (stdin when absent or `-`).
    logs: Option<PathBuf>,
    /// Also score retranslation logs by stabilized delays (extension).
    #[arg(long)]
    stable: bool,
    #[command(flatten)]
    output: SummaryArgs,
}

#[derive(Args)]
struct NeArgs {
    /// JSONL stream logs (stdin when absent or `-`).
    logs: Option<PathBuf>,
    #[command(flatten)]
    output: SummaryArgs,
}

#[derive(Args)]
struct BleuArgs {
    /// Hypotheses, one tokenized sentence per line.
    #[arg(long)]
    hyp: PathBuf,
    /// References, line-aligned with --hyp.
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Zero-count smoothing: `exp` or `none`.
    #[arg(long, default_value = "exp")]
    smoothing: Smoothing,
}

#[derive(Args)]
struct NormArgs {
    /// Model BLEU.
    #[arg(long, allow_negative_numbers = true)]
    model: f64,
    /// Full-sentence BLEU on the same test set.
    #[arg(long, allow_negative_numbers = true)]
    base: f64,
}

#[derive(Args)]
struct DropArgs {
    /// Score in the high-latency or high-flicker setting.
    #[arg(long, allow_negative_numbers = true)]
    high: f64,
    /// Score in the low-latency or low-flicker setting.
    #[arg(long, allow_negative_numbers = true)]
    low: f64,
}

#[derive(Args)]
struct BleuStreamArgs {
    /// System stream logs (JSONL).
    #[arg(long)]
    system: PathBuf,
    /// Annotated reference stream logs (JSONL, streaming mode).
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long, default_value = "exp")]
    smoothing: Smoothing,
}

#[derive(Args)]
struct WaitkArgs {
    #[arg(long, value_parser = positive)]
    src_len: usize,
    #[arg(long, value_parser = positive)]
    tgt_len: usize,
    #[arg(long, value_parser = positive)]
    k: usize,
}

#[derive(Args)]
struct ValidateArgs {
    /// JSONL stream logs (stdin when absent or `-`).
    logs: Option<PathBuf>,
    /// Source sentences; line N is checked against the Nth log.
    #[arg(long)]
    source: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    bind: IpAddr,
    /// Journal directory, created if missing.
    #[arg(long, env = monoeval_server::JOURNAL_DIR_ENV)]
    journal_dir: PathBuf,
    /// Static UI assets served for paths outside the API.
    #[arg(long)]
    static_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    /// Journal directory of the annotation server.
    #[arg(long, env = monoeval_server::JOURNAL_DIR_ENV)]
    journal_dir: PathBuf,
    /// Directory receiving references.txt and logs.jsonl.
    #[arg(long)]
    out_dir: PathBuf,
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 => Ok(v),
        Ok(_) => Err("must be non-negative".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Aa(a) => commands::aa(a),
        Command::Filter(a) => commands::filter(a),
        Command::Stats(a) => commands::stats(a),
        Command::Al(a) => commands::al(a),
        Command::Ne(a) => commands::ne(a),
        Command::Bleu(a) => commands::bleu(a),
        Command::Norm(a) => commands::norm(a),
        Command::Drop(a) => commands::drop(a),
        Command::BleuStream(a) => commands::bleu_stream(a),
        Command::WaitkPath(a) => commands::waitk_path(a),
        Command::ValidateLog(a) => commands::validate_log(a),
        Command::Serve(a) => commands::serve(a),
        Command::Export(a) => commands::export(a),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("monoeval: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
