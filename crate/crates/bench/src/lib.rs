//! Synthetic inputs for the criterion benches.

use monoeval_core::{Alignment, SentencePair, TokenSeq};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` pairs of 10..40 tokens with a noisy diagonal alignment each.
pub fn synthetic_corpus(n: usize, seed: u64) -> (Vec<SentencePair>, Vec<Alignment>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(n);
    let mut alignments = Vec::with_capacity(n);
    for line in 0..n {
        let src_len = rng.gen_range(10..40);
        let tgt_len = rng.gen_range(10..40);
        let source = TokenSeq::new((0..src_len).map(|i| format!("s{}", i % 97))).unwrap();
        let target = TokenSeq::new((0..tgt_len).map(|i| format!("t{}", i % 89))).unwrap();
        let links = (0..src_len).map(|i| {
            let diag = i * tgt_len / src_len;
            let jitter = rng.gen_range(0..3);
            (i, (diag + jitter).min(tgt_len - 1))
        });
        alignments.push(Alignment::new(links.collect::<Vec<_>>(), src_len, tgt_len).unwrap());
        pairs.push(SentencePair::new(SentencePair::line_id(line + 1), source, target));
    }
    (pairs, alignments)
}

/// Hypothesis/reference token sequences over a small vocabulary.
pub fn synthetic_bleu_corpus(n: usize, seed: u64) -> (Vec<TokenSeq>, Vec<TokenSeq>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sent = |rng: &mut ChaCha8Rng| {
        let len = rng.gen_range(5..30);
        TokenSeq::new((0..len).map(|_| format!("w{}", rng.gen_range(0..50)))).unwrap()
    };
    let hyps = (0..n).map(|_| sent(&mut rng)).collect();
    let refs = (0..n).map(|_| sent(&mut rng)).collect();
    (hyps, refs)
}
