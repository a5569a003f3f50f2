//! Brute-force reference computations, written without reference to the
//! library code paths they check.

#![allow(dead_code)]

/// All n-grams of `tokens` as owned vectors, in position order.
pub fn ngrams(tokens: &[String], n: usize) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    if tokens.len() < n {
        return out;
    }
    for start in 0..=tokens.len() - n {
        out.push(tokens[start..start + n].to_vec());
    }
    out
}

fn occurrences(list: &[Vec<String>], gram: &[String]) -> u64 {
    list.iter().filter(|g| g.as_slice() == gram).count() as u64
}

/// Unsmoothed corpus BLEU-4 by linear-scan n-gram counting.
/// Returns (score on 0-100, precisions, brevity penalty).
pub fn bleu_unsmoothed(hyps: &[Vec<String>], refs: &[Vec<String>]) -> (f64, [f64; 4], f64) {
    let mut matches = [0u64; 4];
    let mut totals = [0u64; 4];
    let mut hyp_len = 0u64;
    let mut ref_len = 0u64;
    for (h, r) in hyps.iter().zip(refs) {
        hyp_len += h.len() as u64;
        ref_len += r.len() as u64;
        for n in 1..=4 {
            let hg = ngrams(h, n);
            let rg = ngrams(r, n);
            totals[n - 1] += hg.len() as u64;
            let mut distinct: Vec<Vec<String>> = Vec::new();
            for g in &hg {
                if !distinct.contains(g) {
                    distinct.push(g.clone());
                }
            }
            for g in &distinct {
                matches[n - 1] += occurrences(&hg, g).min(occurrences(&rg, g));
            }
        }
    }
    let mut precisions = [0.0; 4];
    for n in 0..4 {
        if totals[n] > 0 {
            precisions[n] = matches[n] as f64 / totals[n] as f64;
        }
    }
    let bp = if hyp_len == 0 {
        0.0
    } else if hyp_len > ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    };
    let score = if precisions.contains(&0.0) {
        0.0
    } else {
        let logs: f64 = precisions.iter().map(|p| p.ln()).sum();
        100.0 * bp * (logs / 4.0).exp()
    };
    (score, precisions, bp)
}

/// Average Anticipation by direct term enumeration over a link list, with
/// duplicates removed by pairwise comparison.
pub fn aa_enumerate(links: &[(usize, usize)]) -> Option<f64> {
    let mut unique: Vec<(usize, usize)> = Vec::new();
    for l in links {
        if !unique.contains(l) {
            unique.push(*l);
        }
    }
    if unique.is_empty() {
        return None;
    }
    let mut sum = 0i64;
    for (i, j) in &unique {
        let d = *i as i64 - *j as i64;
        if d > 0 {
            sum += d;
        }
    }
    Some(sum as f64 / unique.len() as f64)
}
