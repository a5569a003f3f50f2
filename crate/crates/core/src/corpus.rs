//! Parallel corpus ingestion, corpus-wide AA scoring, monotonic subset
//! extraction and dataset statistics.
//!
//! The file-based entry points ([`ParallelReader`], [`filter_files`],
//! [`score_files`]) stream the inputs in fixed-size chunks, so memory use
//! does not grow with the corpus. Scoring inside a chunk runs in parallel;
//! everything that is written or summed happens in input order, so outputs
//! are byte-identical across runs and thread counts.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Lines, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{AlignmentError, CorpusError};
use crate::latency::{al, delays_from_log};
use crate::monotonicity::{parse_pharaoh, Alignment};
use crate::report::{fmt_real, MetricReport};
use crate::stream::StreamLog;
use crate::tokens::{SentencePair, TokenSeq};

/// Lines processed per parallel chunk in the streaming pipeline.
pub const CHUNK_LINES: usize = 8192;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub source: String,
    pub target: String,
    pub alignment: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub pairs: Vec<SentencePair>,
    pub provenance: Provenance,
}

impl Corpus {
    /// In-memory corpus with `line-N` ids.
    pub fn from_lines<'a>(
        source: impl IntoIterator<Item = &'a str>,
        target: impl IntoIterator<Item = &'a str>,
    ) -> Self {
        let pairs = source
            .into_iter()
            .zip(target)
            .enumerate()
            .map(|(n, (s, t))| {
                SentencePair::new(
                    SentencePair::line_id(n + 1),
                    TokenSeq::from_line(s),
                    TokenSeq::from_line(t),
                )
            })
            .collect();
        Corpus {
            pairs,
            provenance: Provenance {
                source: "<memory>".into(),
                target: "<memory>".into(),
                alignment: None,
            },
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

fn open_lines(path: &Path) -> Result<Lines<BufReader<File>>, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(BufReader::new(file).lines())
}

fn next_line(
    lines: &mut Lines<BufReader<File>>,
    path: &Path,
) -> Result<Option<String>, CorpusError> {
    lines.next().transpose().map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Line-by-line reader over a source file, a target file and an optional
/// Pharaoh alignment file. Yields one pair (and alignment) per line.
pub struct ParallelReader {
    paths: [PathBuf; 3],
    src: Lines<BufReader<File>>,
    tgt: Lines<BufReader<File>>,
    align: Option<Lines<BufReader<File>>>,
    line: usize,
    done: bool,
}

impl ParallelReader {
    pub fn open(source: &Path, target: &Path, alignment: Option<&Path>) -> Result<Self, CorpusError> {
        Ok(ParallelReader {
            src: open_lines(source)?,
            tgt: open_lines(target)?,
            align: alignment.map(open_lines).transpose()?,
            paths: [
                source.to_path_buf(),
                target.to_path_buf(),
                alignment.map(Path::to_path_buf).unwrap_or_default(),
            ],
            line: 0,
            done: false,
        })
    }

    pub fn provenance(&self) -> Provenance {
        Provenance {
            source: self.paths[0].display().to_string(),
            target: self.paths[1].display().to_string(),
            alignment: self.align.as_ref().map(|_| self.paths[2].display().to_string()),
        }
    }

    fn mismatch(&mut self, present: [bool; 3]) -> CorpusError {
        // finish counting the longer file(s) so both counts can be reported
        let mut counts = [self.line; 3];
        for (k, has) in present.iter().enumerate() {
            if !*has {
                continue;
            }
            let lines = match k {
                0 => &mut self.src,
                1 => &mut self.tgt,
                _ => match self.align.as_mut() {
                    Some(l) => l,
                    None => continue,
                },
            };
            counts[k] += 1 + lines.by_ref().count();
        }
        let (a, b) = if present[0] != present[1] {
            (0, 1)
        } else if present[0] != present[2] {
            (0, 2)
        } else {
            (1, 2)
        };
        CorpusError::LineCountMismatch {
            left_path: self.paths[a].clone(),
            left: counts[a],
            right_path: self.paths[b].clone(),
            right: counts[b],
        }
    }

    fn read_one(&mut self) -> Result<Option<(SentencePair, Option<Alignment>)>, CorpusError> {
        let s = next_line(&mut self.src, &self.paths[0])?;
        let t = next_line(&mut self.tgt, &self.paths[1])?;
        let a = match self.align.as_mut() {
            Some(lines) => Some(next_line(lines, &self.paths[2])?),
            None => None,
        };
        let a_present = a.as_ref().map(Option::is_some);
        let present = [s.is_some(), t.is_some(), a_present.unwrap_or(s.is_some())];
        if present.iter().all(|p| !p) {
            return Ok(None);
        }
        if !present.iter().all(|p| *p) {
            return Err(self.mismatch(present));
        }
        self.line += 1;
        let pair = SentencePair::new(
            SentencePair::line_id(self.line),
            TokenSeq::from_line(&s.expect("present")),
            TokenSeq::from_line(&t.expect("present")),
        );
        let alignment = a
            .flatten()
            .map(|l| parse_pharaoh(&l, pair.source.len(), pair.target.len()))
            .transpose()
            .map_err(|source| CorpusError::Alignment {
                path: self.paths[2].clone(),
                line: self.line,
                source,
            })?;
        Ok(Some((pair, alignment)))
    }

    /// Up to `max` further lines.
    pub fn next_chunk(
        &mut self,
        max: usize,
    ) -> Result<Vec<(SentencePair, Option<Alignment>)>, CorpusError> {
        let mut out = Vec::with_capacity(max.min(CHUNK_LINES));
        while out.len() < max {
            match self.next() {
                Some(item) => out.push(item?),
                None => break,
            }
        }
        Ok(out)
    }
}

impl Iterator for ParallelReader {
    type Item = Result<(SentencePair, Option<Alignment>), CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let item = self.read_one();
        if !matches!(item, Ok(Some(_))) {
            self.done = true;
        }
        item.transpose()
    }
}

/// Loads a whole parallel corpus, validating alignment bounds per line.
pub fn load_parallel(
    source: &Path,
    target: &Path,
    alignment: Option<&Path>,
) -> Result<(Corpus, Option<Vec<Alignment>>), CorpusError> {
    let reader = ParallelReader::open(source, target, alignment)?;
    let provenance = reader.provenance();
    let mut pairs = Vec::new();
    let mut alignments = alignment.map(|_| Vec::new());
    for item in reader {
        let (pair, a) = item?;
        pairs.push(pair);
        if let (Some(all), Some(a)) = (alignments.as_mut(), a) {
            all.push(a);
        }
    }
    Ok((Corpus { pairs, provenance }, alignments))
}

/// AA outcome of one pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairScore {
    Scored {
        aa: f64,
        anticipation: u64,
        links: u64,
    },
    Unscoreable,
}

impl PairScore {
    pub fn of(alignment: &Alignment) -> Self {
        if alignment.is_empty() {
            PairScore::Unscoreable
        } else {
            let anticipation = alignment.anticipation_total();
            let links = alignment.len() as u64;
            PairScore::Scored {
                aa: anticipation as f64 / links as f64,
                anticipation,
                links,
            }
        }
    }

    pub fn aa(&self) -> Result<f64, AlignmentError> {
        match self {
            PairScore::Scored { aa, .. } => Ok(*aa),
            PairScore::Unscoreable => Err(AlignmentError::EmptyAlignment),
        }
    }

    /// TSV cell: the AA value, or `unscoreable`.
    pub fn cell(&self) -> String {
        match self {
            PairScore::Scored { aa, .. } => fmt_real(*aa),
            PairScore::Unscoreable => "unscoreable".to_string(),
        }
    }
}

/// Running corpus totals over pair scores, folded in input order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct AaSummary {
    pub total: usize,
    pub scored: usize,
    pub unscoreable: usize,
    pub monotonic: usize,
    aa_sum: f64,
    anticipation_sum: u64,
    link_sum: u64,
}

impl AaSummary {
    pub fn push(&mut self, score: &PairScore) {
        self.total += 1;
        match *score {
            PairScore::Scored {
                aa,
                anticipation,
                links,
            } => {
                self.scored += 1;
                self.aa_sum += aa;
                self.anticipation_sum += anticipation;
                self.link_sum += links;
                if anticipation == 0 {
                    self.monotonic += 1;
                }
            }
            PairScore::Unscoreable => self.unscoreable += 1,
        }
    }

    /// Unweighted mean of per-pair AA over scored pairs.
    pub fn mean_aa(&self) -> Option<f64> {
        (self.scored > 0).then(|| self.aa_sum / self.scored as f64)
    }

    /// AA pooled over all links of all scored pairs.
    pub fn link_weighted_aa(&self) -> Option<f64> {
        (self.link_sum > 0).then(|| self.anticipation_sum as f64 / self.link_sum as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AaReport {
    pub per_pair: Vec<(String, PairScore)>,
    pub summary: AaSummary,
}

impl AaReport {
    pub fn mean_aa(&self) -> Option<f64> {
        self.summary.mean_aa()
    }

    pub fn monotonic_count(&self) -> usize {
        self.summary.monotonic
    }

    pub fn total(&self) -> usize {
        self.summary.total
    }

    /// `id\taa` lines, one per pair.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (id, score) in &self.per_pair {
            out.push_str(id);
            out.push('\t');
            out.push_str(&score.cell());
            out.push('\n');
        }
        out
    }
}

fn check_paired(pairs: &[SentencePair], alignments: &[Alignment]) -> Result<(), CorpusError> {
    if pairs.len() != alignments.len() {
        return Err(CorpusError::Unpaired {
            pairs: pairs.len(),
            alignments: alignments.len(),
        });
    }
    Ok(())
}

/// AA of every pair. Empty alignments are recorded as unscoreable and left
/// out of the mean.
pub fn score_corpus(pairs: &[SentencePair], alignments: &[Alignment]) -> Result<AaReport, CorpusError> {
    check_paired(pairs, alignments)?;
    let scores: Vec<PairScore> = alignments.par_iter().map(PairScore::of).collect();
    let mut summary = AaSummary::default();
    let per_pair = pairs
        .iter()
        .zip(scores)
        .map(|(p, s)| {
            summary.push(&s);
            (p.id.clone(), s)
        })
        .collect();
    Ok(AaReport { per_pair, summary })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleSpec {
    pub size: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterOptions {
    /// Keep pairs with AA at most this value.
    pub threshold: f64,
    /// Uniform seeded subsample of the eligible pairs.
    pub sample: Option<SampleSpec>,
}

impl Default for FilterOptions {
    fn default() -> Self {
        FilterOptions {
            threshold: 0.0,
            sample: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FilterStats {
    pub total: usize,
    /// Pairs with AA at or below the threshold.
    pub eligible: usize,
    pub kept: usize,
    pub dropped_above_threshold: usize,
    pub dropped_unscoreable: usize,
    pub dropped_by_sampling: usize,
}

/// Why a pair was not kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    AboveThreshold,
    Unscoreable,
}

/// Capacity, generator and `(input index, pair)` slots.
type Reservoir = (usize, ChaCha8Rng, Vec<(usize, SentencePair)>);

/// Order-preserving selection of pairs whose AA is within the threshold.
///
/// Without sampling, eligible pairs are handed back from [`offer`] at once.
/// With sampling they are held in a seeded reservoir (Algorithm R over a
/// ChaCha8 stream) and released in input order by [`finish`].
///
/// [`offer`]: MonotonicSelector::offer
/// [`finish`]: MonotonicSelector::finish
pub struct MonotonicSelector {
    threshold: f64,
    reservoir: Option<Reservoir>,
    stats: FilterStats,
}

impl MonotonicSelector {
    pub fn new(options: FilterOptions) -> Self {
        MonotonicSelector {
            threshold: options.threshold,
            reservoir: options
                .sample
                .map(|s| (s.size, ChaCha8Rng::seed_from_u64(s.seed), Vec::new())),
            stats: FilterStats::default(),
        }
    }

    /// Decides one pair. `Ok(Some(pair))` means keep it now; `Ok(None)`
    /// means it went to the reservoir.
    pub fn offer(
        &mut self,
        pair: SentencePair,
        score: &PairScore,
    ) -> Result<Option<SentencePair>, DropReason> {
        let index = self.stats.total;
        self.stats.total += 1;
        let aa = match score {
            PairScore::Scored { aa, .. } => *aa,
            PairScore::Unscoreable => {
                self.stats.dropped_unscoreable += 1;
                return Err(DropReason::Unscoreable);
            }
        };
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(aa <= self.threshold) {
            self.stats.dropped_above_threshold += 1;
            return Err(DropReason::AboveThreshold);
        }
        let seen = self.stats.eligible;
        self.stats.eligible += 1;
        let Some((size, rng, slots)) = self.reservoir.as_mut() else {
            self.stats.kept += 1;
            return Ok(Some(pair));
        };
        if slots.len() < *size {
            slots.push((index, pair));
        } else {
            let r = rng.gen_range(0..=seen);
            if r < *size {
                slots[r] = (index, pair);
            }
        }
        Ok(None)
    }

    /// Reservoir contents in input order, and final counts.
    pub fn finish(self) -> (Vec<SentencePair>, FilterStats) {
        let mut stats = self.stats;
        let kept = match self.reservoir {
            Some((_, _, mut slots)) => {
                slots.sort_by_key(|(i, _)| *i);
                stats.kept = slots.len();
                stats.dropped_by_sampling = stats.eligible - slots.len();
                slots.into_iter().map(|(_, p)| p).collect()
            }
            None => Vec::new(),
        };
        (kept, stats)
    }
}

/// Keeps the pairs whose AA is at most the threshold, in input order.
pub fn filter_monotonic(
    pairs: &[SentencePair],
    alignments: &[Alignment],
    options: FilterOptions,
) -> Result<(Vec<SentencePair>, FilterStats), CorpusError> {
    check_paired(pairs, alignments)?;
    let scores: Vec<PairScore> = alignments.par_iter().map(PairScore::of).collect();
    let mut selector = MonotonicSelector::new(options);
    let mut kept = Vec::new();
    for (pair, score) in pairs.iter().zip(&scores) {
        if let Ok(Some(p)) = selector.offer(pair.clone(), score) {
            kept.push(p);
        }
    }
    let (sampled, stats) = selector.finish();
    kept.extend(sampled);
    Ok((kept, stats))
}

/// Output paths written by [`filter_files`] for a given prefix.
pub struct FilterOutputs {
    pub aa_tsv: PathBuf,
    pub kept_src: PathBuf,
    pub kept_tgt: PathBuf,
    pub stats_json: PathBuf,
}

impl FilterOutputs {
    pub fn for_prefix(prefix: &str) -> Self {
        FilterOutputs {
            aa_tsv: format!("{prefix}.aa.tsv").into(),
            kept_src: format!("{prefix}.kept.src").into(),
            kept_tgt: format!("{prefix}.kept.tgt").into(),
            stats_json: format!("{prefix}.stats.json").into(),
        }
    }
}

struct Out {
    path: PathBuf,
    w: BufWriter<File>,
}

impl Out {
    fn create(path: &Path) -> Result<Self, CorpusError> {
        let file = File::create(path).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Out {
            path: path.to_path_buf(),
            w: BufWriter::new(file),
        })
    }

    fn line(&mut self, text: &str) -> Result<(), CorpusError> {
        self.w
            .write_all(text.as_bytes())
            .and_then(|_| self.w.write_all(b"\n"))
            .map_err(|source| self.io(source))
    }

    fn io(&self, source: io::Error) -> CorpusError {
        CorpusError::Io {
            path: self.path.clone(),
            source,
        }
    }

    fn close(mut self) -> Result<(), CorpusError> {
        self.w.flush().map_err(|source| self.io(source))
    }
}

fn threshold_value(t: f64) -> Value {
    if t.is_finite() {
        json!(t)
    } else {
        json!(t.to_string())
    }
}

fn summary_json(summary: &AaSummary) -> Value {
    json!({
        "total": summary.total,
        "scored": summary.scored,
        "unscoreable": summary.unscoreable,
        "monotonic": summary.monotonic,
        "mean_aa": summary.mean_aa(),
        "link_weighted_aa": summary.link_weighted_aa(),
    })
}

/// Streams the corpus through scoring and writes the AA table only.
/// Returns the corpus summary; TSV lines go to `tsv` in input order.
pub fn score_files<W: Write>(
    source: &Path,
    target: &Path,
    alignment: &Path,
    tsv: &mut W,
) -> Result<AaSummary, CorpusError> {
    let mut reader = ParallelReader::open(source, target, Some(alignment))?;
    let mut summary = AaSummary::default();
    loop {
        let chunk = reader.next_chunk(CHUNK_LINES)?;
        if chunk.is_empty() {
            break;
        }
        let scores = score_chunk(&chunk);
        for ((pair, _), score) in chunk.iter().zip(&scores) {
            summary.push(score);
            writeln!(tsv, "{}\t{}", pair.id, score.cell()).map_err(|source| CorpusError::Io {
                path: "<output>".into(),
                source,
            })?;
        }
    }
    Ok(summary)
}

fn score_chunk(chunk: &[(SentencePair, Option<Alignment>)]) -> Vec<PairScore> {
    chunk
        .par_iter()
        .map(|(_, a)| a.as_ref().map_or(PairScore::Unscoreable, PairScore::of))
        .collect()
}

/// File-to-file monotonic filtering: writes `<prefix>.aa.tsv`,
/// `<prefix>.kept.src`, `<prefix>.kept.tgt` and `<prefix>.stats.json`.
pub fn filter_files(
    source: &Path,
    target: &Path,
    alignment: &Path,
    prefix: &str,
    options: FilterOptions,
) -> Result<(FilterStats, AaSummary), CorpusError> {
    let outputs = FilterOutputs::for_prefix(prefix);
    let mut reader = ParallelReader::open(source, target, Some(alignment))?;
    let provenance = reader.provenance();
    let mut aa_out = Out::create(&outputs.aa_tsv)?;
    let mut src_out = Out::create(&outputs.kept_src)?;
    let mut tgt_out = Out::create(&outputs.kept_tgt)?;
    let mut selector = MonotonicSelector::new(options);
    let mut summary = AaSummary::default();
    loop {
        let chunk = reader.next_chunk(CHUNK_LINES)?;
        if chunk.is_empty() {
            break;
        }
        let scores = score_chunk(&chunk);
        for ((pair, _), score) in chunk.into_iter().zip(&scores) {
            summary.push(score);
            aa_out.line(&format!("{}\t{}", pair.id, score.cell()))?;
            if let Ok(Some(kept)) = selector.offer(pair, score) {
                src_out.line(&kept.source.to_string())?;
                tgt_out.line(&kept.target.to_string())?;
            }
        }
    }
    let (sampled, stats) = selector.finish();
    for kept in &sampled {
        src_out.line(&kept.source.to_string())?;
        tgt_out.line(&kept.target.to_string())?;
    }
    aa_out.close()?;
    src_out.close()?;
    tgt_out.close()?;

    let report = json!({
        "scores": summary_json(&summary),
        "filter": stats,
        "parameters": {
            "threshold": threshold_value(options.threshold),
            "sample_size": options.sample.map(|s| s.size),
            "seed": options.sample.map(|s| s.seed),
        },
        "inputs": provenance,
    });
    let mut stats_out = Out::create(&outputs.stats_json)?;
    stats_out.line(&serde_json::to_string_pretty(&report).expect("json"))?;
    stats_out.close()?;
    Ok((stats, summary))
}

/// Dataset statistics: source/target lengths (the mean source length is
/// the AL of full-sentence translation), AA when alignments are given, and
/// annotation AL from streaming logs when given.
pub fn dataset_stats(
    corpus: &Corpus,
    alignments: Option<&[Alignment]>,
    logs: Option<&[StreamLog]>,
) -> Result<MetricReport, CorpusError> {
    let mut report = MetricReport::new();
    report.input("source", &corpus.provenance.source);
    report.input("target", &corpus.provenance.target);
    if let Some(a) = &corpus.provenance.alignment {
        report.input("alignment", a);
    }
    for pair in &corpus.pairs {
        report.set(&pair.id, "source_len", pair.source.len() as f64);
        report.set(&pair.id, "target_len", pair.target.len() as f64);
    }
    report.corpus.insert("pairs".into(), corpus.len() as f64);
    report.aggregate_mean("source_len");
    report.aggregate_mean("target_len");
    if let Some(mean) = report.corpus.get("mean_source_len").copied() {
        report.corpus.insert("al_full_sentence".into(), mean);
    }

    if let Some(alignments) = alignments {
        let aa = score_corpus(&corpus.pairs, alignments)?;
        for (id, score) in &aa.per_pair {
            if let PairScore::Scored { aa, .. } = score {
                report.set(id, "aa", *aa);
            }
        }
        report.aggregate_mean("aa");
        report.corpus.insert("monotonic_pairs".into(), aa.summary.monotonic as f64);
        report.corpus.insert("unscoreable_pairs".into(), aa.summary.unscoreable as f64);
    }

    if let Some(logs) = logs {
        let mut skipped = 0usize;
        for log in logs {
            match delays_from_log(log).and_then(|p| al(&p)) {
                Ok(v) => report.set(log.id(), "annotation_al", v),
                Err(_) => skipped += 1,
            }
        }
        report.aggregate_mean("annotation_al");
        report.corpus.insert("annotation_logs_skipped".into(), skipped as f64);
    }
    Ok(report)
}
