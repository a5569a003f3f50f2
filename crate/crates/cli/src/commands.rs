//! One adapter per subcommand. Each one loads inputs, calls the library and
//! prints the library's result; none of them computes a metric itself.

use std::collections::HashSet;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::net::SocketAddr;
use std::path::Path;

use monoeval_core::annotation::SessionState;
use monoeval_core::corpus::{
    dataset_stats, filter_files, load_parallel, score_files, FilterOptions, SampleSpec,
};
use monoeval_core::latency::{self, stable_delays};
use monoeval_core::quality::{corpus_bleu, format_percent, stream_pairs};
use monoeval_core::report::{fmt_real, fmt_score, CorpusSummary};
use monoeval_core::{
    delays_from_log, drop_rate, norm_score, serialize_stream_log, trace_from_log,
    waitk_path as waitk_schedule, BleuScore, Mode, QualityError, Smoothing,
    StreamLog,
};
use monoeval_server::{serve as run_server, Durability, ServeConfig, SessionStore};
use serde_json::{json, Value};

use crate::input::{read_logs, read_sentences, require_files, Input, LoggedLine};
use crate::{
    AaArgs, AlArgs, BleuArgs, BleuStreamArgs, CliError, DropArgs, ExportArgs, FilterArgs, NeArgs,
    NormArgs, ServeArgs, StatsArgs, SummaryArgs, ValidateArgs, WaitkArgs,
};

fn stdout_err(e: io::Error) -> CliError {
    CliError::Data(format!("<stdout>: {e}"))
}

fn print(text: &str) -> Result<(), CliError> {
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes()).map_err(stdout_err)?;
    out.flush().map_err(stdout_err)
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Per-item TSV goes to `--out` or stdout. The JSON summary goes to
/// `--summary` when given, otherwise to stdout when the TSV went to a file.
fn emit(output: &SummaryArgs, tsv: &str, summary_json: &str) -> Result<(), CliError> {
    let mut summary_line = summary_json.to_string();
    summary_line.push('\n');
    match &output.out {
        Some(path) => write_file(path, tsv)?,
        None => print(tsv)?,
    }
    match (&output.summary, &output.out) {
        (Some(path), _) => write_file(path, &summary_line),
        (None, Some(_)) => print(&summary_line),
        (None, None) => Ok(()),
    }
}

fn human_mean(metric: &str, mean: Option<f64>, count: usize, skipped: usize) {
    match mean {
        Some(m) => eprintln!("{metric}: mean {m:.2} over {count} sentences ({skipped} skipped)"),
        None => eprintln!("{metric}: no scoreable sentences ({skipped} skipped)"),
    }
}

pub fn aa(args: AaArgs) -> Result<(), CliError> {
    require_files([args.src.as_path(), args.tgt.as_path(), args.align.as_path()])?;
    let mut tsv = Vec::new();
    let summary = score_files(&args.src, &args.tgt, &args.align, &mut tsv)
        .map_err(|e| CliError::Data(e.to_string()))?;
    let tsv = String::from_utf8(tsv).expect("tsv is utf-8");
    let (mean, weighting) = if args.link_weighted {
        (summary.link_weighted_aa(), "links")
    } else {
        (summary.mean_aa(), "pairs")
    };
    let report = CorpusSummary {
        metric: "aa".into(),
        mean,
        count: summary.scored,
        skipped: summary.unscoreable,
        parameters: Default::default(),
    }
    .param("weighting", weighting)
    .param("monotonic", summary.monotonic)
    .param("source", args.src.display())
    .param("target", args.tgt.display())
    .param("alignment", args.align.display());
    emit(&args.output, &tsv, &report.to_json())?;
    human_mean("AA", mean, summary.scored, summary.unscoreable);
    eprintln!("AA: {} of {} pairs monotonic", summary.monotonic, summary.total);
    Ok(())
}

pub fn filter(args: FilterArgs) -> Result<(), CliError> {
    require_files([args.src.as_path(), args.tgt.as_path(), args.align.as_path()])?;
    let options = FilterOptions {
        threshold: args.threshold,
        sample: match (args.sample, args.seed) {
            (Some(size), Some(seed)) => Some(SampleSpec { size, seed }),
            _ => None,
        },
    };
    let (stats, _) = filter_files(&args.src, &args.tgt, &args.align, &args.prefix, options)
        .map_err(|e| CliError::Data(e.to_string()))?;
    eprintln!(
        "filter: kept {} of {} pairs ({} above threshold, {} unscoreable, {} not sampled)",
        stats.kept,
        stats.total,
        stats.dropped_above_threshold,
        stats.dropped_unscoreable,
        stats.dropped_by_sampling
    );
    Ok(())
}

pub fn stats(args: StatsArgs) -> Result<(), CliError> {
    let mut files = vec![args.src.as_path(), args.tgt.as_path()];
    files.extend(args.align.as_deref());
    files.extend(args.logs.as_deref());
    require_files(files)?;
    let (corpus, alignments) = load_parallel(&args.src, &args.tgt, args.align.as_deref())
        .map_err(|e| CliError::Data(e.to_string()))?;
    let logs: Option<Vec<StreamLog>> = match &args.logs {
        Some(p) => Some(
            read_logs(&Input::File(p.clone()))?
                .into_iter()
                .map(|l| l.log)
                .collect(),
        ),
        None => None,
    };
    let mut report = dataset_stats(&corpus, alignments.as_deref(), logs.as_deref())
        .map_err(|e| CliError::Data(e.to_string()))?;
    if let Some(p) = &args.logs {
        report.input("logs", p.display().to_string());
    }
    print(&format!("{}\n", report.to_json()))?;
    eprintln!("stats: {} pairs", corpus.len());
    Ok(())
}

fn check_input(input: &Input) -> Result<(), CliError> {
    match input {
        Input::File(p) => require_files([p.as_path()]),
        Input::Stdin => Ok(()),
    }
}

pub fn al(args: AlArgs) -> Result<(), CliError> {
    let input = Input::from_arg(args.logs);
    check_input(&input)?;
    let logs = read_logs(&input)?;
    let mut tsv = String::new();
    let mut values = Vec::new();
    let mut skipped = 0;
    for LoggedLine { line, log } in &logs {
        let profile = match (log.mode(), args.stable) {
            (Mode::Streaming, _) => delays_from_log(log),
            (Mode::Retranslation, true) => {
                trace_from_log(log).and_then(|t| stable_delays(&t, log.read_count()))
            }
            (Mode::Retranslation, false) => {
                eprintln!("{input}:{line}: skipping retranslation log {:?} (see --stable)", log.id());
                skipped += 1;
                continue;
            }
        };
        let value = profile
            .and_then(|p| latency::al(&p))
            .map_err(|e| CliError::Data(format!("{input}:{line}: {e}")))?;
        tsv.push_str(&format!("{}\t{}\n", log.id(), fmt_real(value)));
        values.push(value);
    }
    let summary = CorpusSummary::from_values("al", &values, skipped)
        .param("stable", args.stable)
        .param("input", &input);
    emit(&args.output, &tsv, &summary.to_json())?;
    human_mean("AL", summary.mean, summary.count, skipped);
    Ok(())
}

pub fn ne(args: NeArgs) -> Result<(), CliError> {
    let input = Input::from_arg(args.logs);
    check_input(&input)?;
    let logs = read_logs(&input)?;
    let mut tsv = String::new();
    let mut values = Vec::new();
    let mut skipped = 0;
    for LoggedLine { line, log } in &logs {
        if log.mode() != Mode::Retranslation {
            eprintln!("{input}:{line}: skipping streaming log {:?}", log.id());
            skipped += 1;
            continue;
        }
        let value = trace_from_log(log)
            .and_then(|t| latency::ne(&t))
            .map_err(|e| CliError::Data(format!("{input}:{line}: {e}")))?;
        tsv.push_str(&format!("{}\t{}\n", log.id(), fmt_real(value)));
        values.push(value);
    }
    let summary = CorpusSummary::from_values("ne", &values, skipped).param("input", &input);
    emit(&args.output, &tsv, &summary.to_json())?;
    human_mean("NE", summary.mean, summary.count, skipped);
    Ok(())
}

/// Machine-readable BLEU: the score to four decimals, every other field as
/// computed.
pub fn bleu_json(score: &BleuScore, smoothing: Smoothing) -> Value {
    json!({
        "score": fmt_score(score.score).parse::<f64>().expect("formatted float"),
        "precisions": score.precisions,
        "brevity_penalty": score.brevity_penalty,
        "hyp_len": score.hyp_len,
        "ref_len": score.ref_len,
        "smoothing": smoothing,
    })
}

fn print_json(value: &Value) -> Result<(), CliError> {
    print(&format!("{}\n", serde_json::to_string_pretty(value).expect("json")))
}

pub fn bleu(args: BleuArgs) -> Result<(), CliError> {
    require_files([args.hyp.as_path(), args.reference.as_path()])?;
    let hyps = read_sentences(&args.hyp)?;
    let refs = read_sentences(&args.reference)?;
    if hyps.len() != refs.len() {
        return Err(CliError::Data(format!(
            "line count mismatch: {} has {} lines, {} has {} lines",
            args.hyp.display(),
            hyps.len(),
            args.reference.display(),
            refs.len()
        )));
    }
    let score = corpus_bleu(&hyps, &refs, args.smoothing)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.hyp.display())))?;
    print_json(&bleu_json(&score, args.smoothing))?;
    eprintln!("BLEU = {:.1}", score.score);
    Ok(())
}

pub fn norm(args: NormArgs) -> Result<(), CliError> {
    let v = norm_score(args.model, args.base).map_err(|e| CliError::Usage(e.to_string()))?;
    print(&format!("{}\n", fmt_score(v)))
}

pub fn drop(args: DropArgs) -> Result<(), CliError> {
    let v = drop_rate(args.high, args.low).map_err(|e| CliError::Usage(e.to_string()))?;
    print(&format!("{}\n", format_percent(v)))
}

fn line_of(logs: &[LoggedLine], id: &str) -> Option<usize> {
    logs.iter().find(|l| l.log.id() == id).map(|l| l.line)
}

pub fn bleu_stream(args: BleuStreamArgs) -> Result<(), CliError> {
    require_files([args.system.as_path(), args.reference.as_path()])?;
    let sys_in = Input::File(args.system.clone());
    let ref_in = Input::File(args.reference.clone());
    let system = read_logs(&sys_in)?;
    let reference = read_logs(&ref_in)?;
    let sys_logs: Vec<StreamLog> = system.iter().map(|l| l.log.clone()).collect();
    let ref_logs: Vec<StreamLog> = reference.iter().map(|l| l.log.clone()).collect();
    let locate = |e: QualityError| -> CliError {
        let at = |input: &Input, logs: &[LoggedLine], id: &str| match line_of(logs, id) {
            Some(line) => format!("{input}:{line}"),
            None => input.to_string(),
        };
        let place = match &e {
            QualityError::UnmatchedSystem(id) => at(&sys_in, &system, id),
            QualityError::UnmatchedReference(id)
            | QualityError::ReferenceNotStreaming(id)
            | QualityError::SourceLenMismatch { id, .. } => at(&ref_in, &reference, id),
            QualityError::DuplicateId(id) => {
                let dup = |logs: &[LoggedLine]| logs.iter().filter(|l| l.log.id() == id).nth(1).map(|l| l.line);
                match (dup(&system), dup(&reference)) {
                    (Some(line), _) => format!("{sys_in}:{line}"),
                    (None, Some(line)) => format!("{ref_in}:{line}"),
                    (None, None) => ref_in.to_string(),
                }
            }
            _ => ref_in.to_string(),
        };
        CliError::Data(format!("{place}: {e}"))
    };
    let ref_ids: HashSet<&str> = ref_logs.iter().map(StreamLog::id).collect();
    if let Some(extra) = sys_logs.iter().find(|l| !ref_ids.contains(l.id())) {
        return Err(locate(QualityError::UnmatchedSystem(extra.id().to_string())));
    }
    let (hyps, refs) = stream_pairs(&sys_logs, &ref_logs).map_err(locate)?;
    let score = corpus_bleu(&hyps, &refs, args.smoothing).map_err(locate)?;
    let mut out = bleu_json(&score, args.smoothing);
    out["pairs"] = json!(hyps.len());
    print_json(&out)?;
    eprintln!("BLEU-Stream = {:.1} over {} partial pairs", score.score, hyps.len());
    Ok(())
}

pub fn waitk_path(args: WaitkArgs) -> Result<(), CliError> {
    let log = waitk_schedule(args.src_len, args.tgt_len, args.k)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    print(&format!("{}\n", serialize_stream_log(&log)))
}

pub fn validate_log(args: ValidateArgs) -> Result<(), CliError> {
    let input = Input::from_arg(args.logs);
    check_input(&input)?;
    let sources = match &args.source {
        Some(p) => {
            require_files([p.as_path()])?;
            Some(read_sentences(p)?)
        }
        None => None,
    };
    let text = input.read_to_string()?;
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let mut checked = 0usize;
    let mut bad = 0usize;
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = n + 1;
        checked += 1;
        let problems: Vec<String> = match monoeval_core::parse_stream_log(line) {
            Err(e) => vec![e.to_string()],
            Ok(log) => {
                let source = match &sources {
                    Some(s) => match s.get(checked - 1) {
                        Some(src) => Some(src),
                        None => {
                            return Err(CliError::Data(format!(
                                "{input}:{line_no}: no source sentence for this log"
                            )))
                        }
                    },
                    None => None,
                };
                latency::validate_log(&log, source).iter().map(|v| v.to_string()).collect()
            }
        };
        for p in &problems {
            writeln!(out, "{line_no}\t{p}").map_err(stdout_err)?;
            eprintln!("{input}:{line_no}: {p}");
        }
        if !problems.is_empty() {
            bad += 1;
        }
    }
    out.flush().map_err(stdout_err)?;
    if let Some(s) = &sources {
        if s.len() != checked {
            return Err(CliError::Data(format!(
                "{}: {} source sentences for {checked} logs",
                args.source.as_ref().expect("sources come from --source").display(),
                s.len()
            )));
        }
    }
    if bad > 0 {
        return Err(CliError::Data(format!("{bad} of {checked} logs invalid")));
    }
    eprintln!("{checked} logs valid");
    Ok(())
}

pub fn serve(args: ServeArgs) -> Result<(), CliError> {
    if let Some(dir) = &args.static_dir {
        if !dir.is_dir() {
            return Err(CliError::Usage(format!("{}: not a directory", dir.display())));
        }
    }
    let config = ServeConfig {
        addr: SocketAddr::new(args.bind, args.port),
        journal_dir: args.journal_dir,
        static_dir: args.static_dir,
    };
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Data(format!("runtime: {e}")))?;
    runtime
        .block_on(run_server(config))
        .map_err(|e| CliError::Data(e.to_string()))
}

pub fn export(args: ExportArgs) -> Result<(), CliError> {
    if !args.journal_dir.join("sessions").is_dir() {
        return Err(CliError::Data(format!(
            "{}: not an annotation journal",
            args.journal_dir.display()
        )));
    }
    let store = SessionStore::open(&args.journal_dir, Durability::Flush)
        .map_err(|e| CliError::Data(e.to_string()))?;
    let exported = store.export().map_err(|e| CliError::Data(e.to_string()))?;
    fs::create_dir_all(&args.out_dir).map_err(|e| CliError::io(&args.out_dir, e))?;
    write_file(&args.out_dir.join(monoeval_server::http::EXPORT_REFERENCES), &exported.references)?;
    write_file(&args.out_dir.join(monoeval_server::http::EXPORT_LOGS), &exported.logs)?;
    let finished = store
        .sessions()
        .iter()
        .filter(|s| s.state() == SessionState::Finished)
        .count();
    eprintln!("export: {finished} sessions written to {}", args.out_dir.display());
    Ok(())
}
