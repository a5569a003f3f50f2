//! Corpus BLEU-4, score normalization, drop rates and BLEU over recorded
//! streams.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::QualityError;
use crate::stream::{Mode, StreamLog};
use crate::tokens::TokenSeq;

pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Smoothing {
    None,
    #[default]
    Exp,
}

impl std::str::FromStr for Smoothing {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(Smoothing::None),
            "exp" => Ok(Smoothing::Exp),
            other => Err(format!("unknown smoothing {other:?} (expected none|exp)")),
        }
    }
}

/// Sufficient statistics for corpus BLEU. Merging is associative and
/// commutative, so per-sentence stats can be pooled in any order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramStats {
    pub matches: [u64; MAX_ORDER],
    pub totals: [u64; MAX_ORDER],
    pub hyp_len: u64,
    pub ref_len: u64,
}

impl NgramStats {
    pub fn sentence(hypothesis: &[String], reference: &[String]) -> Self {
        let mut stats = NgramStats {
            hyp_len: hypothesis.len() as u64,
            ref_len: reference.len() as u64,
            ..Default::default()
        };
        for n in 1..=MAX_ORDER {
            if hypothesis.len() < n {
                break;
            }
            let mut ref_counts: HashMap<&[String], u64> = HashMap::new();
            for gram in reference.windows(n) {
                *ref_counts.entry(gram).or_default() += 1;
            }
            let mut hyp_counts: HashMap<&[String], u64> = HashMap::new();
            for gram in hypothesis.windows(n) {
                *hyp_counts.entry(gram).or_default() += 1;
            }
            stats.totals[n - 1] = (hypothesis.len() + 1 - n) as u64;
            stats.matches[n - 1] = hyp_counts
                .iter()
                .map(|(gram, &c)| c.min(ref_counts.get(gram).copied().unwrap_or(0)))
                .sum();
        }
        stats
    }

    pub fn merge(mut self, other: NgramStats) -> Self {
        for n in 0..MAX_ORDER {
            self.matches[n] += other.matches[n];
            self.totals[n] += other.totals[n];
        }
        self.hyp_len += other.hyp_len;
        self.ref_len += other.ref_len;
        self
    }

    pub fn score(&self, smoothing: Smoothing) -> BleuScore {
        let mut precisions = [0.0f64; MAX_ORDER];
        let mut smooth = 1.0f64;
        for n in 0..MAX_ORDER {
            if self.totals[n] == 0 {
                break;
            }
            if self.matches[n] == 0 {
                if smoothing == Smoothing::Exp {
                    smooth *= 2.0;
                    precisions[n] = 1.0 / (smooth * self.totals[n] as f64);
                }
            } else {
                precisions[n] = self.matches[n] as f64 / self.totals[n] as f64;
            }
        }
        let brevity_penalty = if self.hyp_len == 0 {
            0.0
        } else if self.hyp_len > self.ref_len {
            1.0
        } else {
            (1.0 - self.ref_len as f64 / self.hyp_len as f64).exp()
        };
        let score = if precisions.contains(&0.0) {
            0.0
        } else {
            let mean_log = precisions.iter().map(|p| p.ln()).sum::<f64>() / MAX_ORDER as f64;
            brevity_penalty * mean_log.exp() * 100.0
        };
        BleuScore {
            score,
            precisions,
            brevity_penalty,
            hyp_len: self.hyp_len,
            ref_len: self.ref_len,
        }
    }
}

/// Corpus BLEU-4 result. Precisions are fractions in `[0, 1]`; the score is
/// on the 0-100 scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BleuScore {
    pub score: f64,
    pub precisions: [f64; MAX_ORDER],
    pub brevity_penalty: f64,
    pub hyp_len: u64,
    pub ref_len: u64,
}

/// Single-reference corpus BLEU with clipped n-gram counts pooled over the
/// whole corpus.
pub fn corpus_bleu(
    hypotheses: &[TokenSeq],
    references: &[TokenSeq],
    smoothing: Smoothing,
) -> Result<BleuScore, QualityError> {
    if hypotheses.len() != references.len() {
        return Err(QualityError::LengthMismatch {
            hypotheses: hypotheses.len(),
            references: references.len(),
        });
    }
    if hypotheses.is_empty() {
        return Err(QualityError::EmptyCorpus);
    }
    let stats = hypotheses
        .par_iter()
        .zip(references.par_iter())
        .map(|(h, r)| NgramStats::sentence(h, r))
        .reduce(NgramStats::default, NgramStats::merge);
    Ok(stats.score(smoothing))
}

/// Model score over the full-sentence (offline) base score.
pub fn norm_score(model_score: f64, base_score: f64) -> Result<f64, QualityError> {
    // negated so that NaN is rejected too
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(base_score > 0.0) {
        return Err(QualityError::NonPositiveBase(base_score));
    }
    Ok(model_score / base_score)
}

/// Relative change from `high_score` to `low_score`, in percent.
pub fn drop_rate(high_score: f64, low_score: f64) -> Result<f64, QualityError> {
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(high_score > 0.0) {
        return Err(QualityError::NonPositiveHigh(high_score));
    }
    Ok((low_score - high_score) / high_score * 100.0)
}

/// `-23.4%` style rendering of a percentage.
pub fn format_percent(pct: f64) -> String {
    let s = format!("{pct:.1}%");
    // -0.0 would print as "-0.0%"
    if s == "-0.0%" {
        "0.0%".to_string()
    } else {
        s
    }
}

/// BLEU between system and reference partial outputs at matching source
/// prefix lengths.
///
/// For every sentence and every prefix length `p` in `1..=|x|`, the system
/// output visible after `p` Reads is paired with the annotated reference
/// stream after `p` Reads. All pairs with a non-empty reference partial are
/// pooled into one corpus BLEU.
pub fn bleu_stream(
    system_logs: &[StreamLog],
    reference_logs: &[StreamLog],
    smoothing: Smoothing,
) -> Result<BleuScore, QualityError> {
    let (hyps, refs) = stream_pairs(system_logs, reference_logs)?;
    corpus_bleu(&hyps, &refs, smoothing)
}

/// The pooled (system partial, reference partial) pairs used by
/// [`bleu_stream`], in reference-log order then prefix order.
pub fn stream_pairs(
    system_logs: &[StreamLog],
    reference_logs: &[StreamLog],
) -> Result<(Vec<TokenSeq>, Vec<TokenSeq>), QualityError> {
    let mut by_id: HashMap<&str, &StreamLog> = HashMap::with_capacity(system_logs.len());
    for log in system_logs {
        if by_id.insert(log.id(), log).is_some() {
            return Err(QualityError::DuplicateId(log.id().to_string()));
        }
    }
    let mut seen = std::collections::HashSet::with_capacity(reference_logs.len());
    let mut hyps = Vec::new();
    let mut refs = Vec::new();
    for reference in reference_logs {
        if !seen.insert(reference.id()) {
            return Err(QualityError::DuplicateId(reference.id().to_string()));
        }
        if reference.mode() != Mode::Streaming {
            return Err(QualityError::ReferenceNotStreaming(reference.id().to_string()));
        }
        let system = by_id
            .get(reference.id())
            .ok_or_else(|| QualityError::UnmatchedReference(reference.id().to_string()))?;
        let (sys_reads, ref_reads) = (system.read_count(), reference.read_count());
        if sys_reads != ref_reads {
            return Err(QualityError::SourceLenMismatch {
                id: reference.id().to_string(),
                system: sys_reads,
                reference: ref_reads,
            });
        }
        for (sys_part, ref_part) in system.partial_outputs().into_iter().zip(reference.partial_outputs()) {
            if ref_part.is_empty() {
                continue;
            }
            hyps.push(sys_part);
            refs.push(ref_part);
        }
    }
    if let Some(extra) = system_logs.iter().find(|l| !seen.contains(l.id())) {
        return Err(QualityError::UnmatchedSystem(extra.id().to_string()));
    }
    Ok((hyps, refs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::example_log;
    use crate::stream::{parse_stream_log, Action};

    fn seqs(lines: &[&str]) -> Vec<TokenSeq> {
        lines.iter().map(|l| TokenSeq::from_line(l)).collect()
    }

    #[test]
    fn perfect_match_is_100() {
        let c = seqs(&["the cat sat on the mat", "a b c d e"]);
        let s = corpus_bleu(&c, &c, Smoothing::None).unwrap();
        assert!((s.score - 100.0).abs() < 1e-9);
        assert_eq!(s.brevity_penalty, 1.0);
    }

    #[test]
    fn empty_hypotheses_score_zero() {
        let h = seqs(&["", ""]);
        let r = seqs(&["a b c", "d e"]);
        for sm in [Smoothing::None, Smoothing::Exp] {
            let s = corpus_bleu(&h, &r, sm).unwrap();
            assert_eq!(s.score, 0.0);
            assert_eq!(s.hyp_len, 0);
            assert_eq!(s.ref_len, 5);
        }
    }

    #[test]
    fn errors() {
        let a = seqs(&["a"]);
        assert!(matches!(
            corpus_bleu(&a, &[], Smoothing::None),
            Err(QualityError::LengthMismatch { .. })
        ));
        assert_eq!(corpus_bleu(&[], &[], Smoothing::None), Err(QualityError::EmptyCorpus));
    }

    #[test]
    fn known_value() {
        // hyp: "the cat the cat", ref: "the cat sat"
        // p1 = 2/4 (the:1 cat:1 clipped), p2 = 1/3, p3 = 0/2, p4 = 0/1
        let h = seqs(&["the cat the cat"]);
        let r = seqs(&["the cat sat"]);
        let none = corpus_bleu(&h, &r, Smoothing::None).unwrap();
        assert_eq!(none.score, 0.0);
        assert_eq!(none.precisions, [0.5, 1.0 / 3.0, 0.0, 0.0]);
        let exp = corpus_bleu(&h, &r, Smoothing::Exp).unwrap();
        // p3 = 1/(2·2), p4 = 1/(4·1)
        let expected = ((0.5f64.ln() + (1.0f64 / 3.0).ln() + 0.25f64.ln() + 0.25f64.ln()) / 4.0).exp() * 100.0;
        assert!((exp.score - expected).abs() < 1e-9);
        assert_eq!(exp.precisions[2], 0.25);
        assert_eq!(exp.precisions[3], 0.25);
    }

    #[test]
    fn brevity_penalty() {
        let h = seqs(&["a b c d"]);
        let r = seqs(&["a b c d e f g h"]);
        let s = corpus_bleu(&h, &r, Smoothing::None).unwrap();
        assert!((s.brevity_penalty - (-1.0f64).exp()).abs() < 1e-15);
        assert!((s.score - 100.0 * (-1.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn norm_and_drop() {
        assert_eq!(norm_score(20.0, 20.0).unwrap(), 1.0);
        assert_eq!(norm_score(12.0, 24.0).unwrap(), 0.5);
        assert!(norm_score(5.0, 0.0).is_err());
        assert!(norm_score(5.0, -1.0).is_err());
        assert!(norm_score(5.0, f64::NAN).is_err());
        assert_eq!(format_percent(drop_rate(25.2, 19.3).unwrap()), "-23.4%");
        assert_eq!(format_percent(drop_rate(78.0, 67.0).unwrap()), "-14.1%");
        assert_eq!(format_percent(drop_rate(24.1, 18.2).unwrap()), "-24.5%");
        assert_eq!(drop_rate(7.5, 7.5).unwrap(), 0.0);
        assert_eq!(format_percent(drop_rate(7.5, 7.5).unwrap()), "0.0%");
        assert!(drop_rate(0.0, 1.0).is_err());
    }

    #[test]
    fn drop_rate_scale_invariant() {
        for c in [0.5, 2.0, 10.0] {
            let a = drop_rate(25.2, 19.3).unwrap();
            let b = drop_rate(25.2 * c, 19.3 * c).unwrap();
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn stream_self_is_100() {
        let log = example_log();
        let s = bleu_stream(&[log.clone()], &[log], Smoothing::Exp).unwrap();
        assert!((s.score - 100.0).abs() < 1e-9);
    }

    #[test]
    fn stream_late_writer_scores_low() {
        let reference = example_log();
        let mut actions: Vec<Action> = reference.read_tokens().map(|t| Action::Read(t.into())).collect();
        actions.extend(reference.written_tokens().map(|t| Action::Write(t.into())));
        let late = StreamLog::new("example", Mode::Streaming, actions).unwrap();
        let s = bleu_stream(&[late], &[reference], Smoothing::Exp).unwrap();
        assert!(s.score < 50.0, "{}", s.score);
        // 4 reference partials are non-empty, the system shows nothing for 3
        assert_eq!(s.ref_len, 1 + 2 + 3 + 4);
        assert_eq!(s.hyp_len, 4);
    }

    #[test]
    fn stream_errors() {
        let a = example_log();
        let b = a.clone().with_id("other");
        assert!(matches!(
            bleu_stream(&[b.clone()], &[a.clone()], Smoothing::Exp),
            Err(QualityError::UnmatchedReference(_))
        ));
        assert!(matches!(
            bleu_stream(&[a.clone(), b], &[a.clone()], Smoothing::Exp),
            Err(QualityError::UnmatchedSystem(_))
        ));
        let short = parse_stream_log(r#"{"id":"example","mode":"streaming","actions":[["R","And"],["W","这"]]}"#).unwrap();
        assert!(matches!(
            bleu_stream(&[short], &[a.clone()], Smoothing::Exp),
            Err(QualityError::SourceLenMismatch { system: 1, reference: 5, .. })
        ));
        assert!(matches!(
            bleu_stream(&[a.clone(), a.clone()], &[a], Smoothing::Exp),
            Err(QualityError::DuplicateId(_))
        ));
    }

    #[test]
    fn stream_retranslation_system() {
        let reference = example_log();
        let line = r#"{"id":"example","mode":"retranslation","actions":[["R","And"],["R","this"],["H",["这"]],["R","made"],["H",["这","使"]],["R","me"],["H",["这","使","我"]],["R","sad"],["H",["这","使","我","难过"]]]}"#;
        let system = parse_stream_log(line).unwrap();
        let s = bleu_stream(&[system], &[reference], Smoothing::Exp).unwrap();
        assert!((s.score - 100.0).abs() < 1e-9);
    }
}
