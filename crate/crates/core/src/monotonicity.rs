//! Word alignments and Average Anticipation (AA).
//!
//! A link `(i, j)` says source word `i` is aligned to target word `j`
//! (both 0-indexed). When `i > j` the target word depends on a source word
//! that a monotonic reader would not have seen yet; AA is the mean of
//! `max(i - j, 0)` over all links. A pair with AA = 0 is monotonic.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::AlignmentError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    links: BTreeSet<(usize, usize)>,
    source_len: usize,
    target_len: usize,
}

impl Alignment {
    pub fn new<I>(links: I, source_len: usize, target_len: usize) -> Result<Self, AlignmentError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut set = BTreeSet::new();
        for (i, j) in links {
            if i >= source_len || j >= target_len {
                return Err(AlignmentError::OutOfBounds {
                    i,
                    j,
                    source_len,
                    target_len,
                });
            }
            set.insert((i, j));
        }
        Ok(Alignment {
            links: set,
            source_len,
            target_len,
        })
    }

    /// Deduplicated links in ascending `(i, j)` order.
    pub fn links(&self) -> impl ExactSizeIterator<Item = (usize, usize)> + '_ {
        self.links.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn source_len(&self) -> usize {
        self.source_len
    }

    pub fn target_len(&self) -> usize {
        self.target_len
    }

    /// Sum of `max(i - j, 0)` over all links.
    pub fn anticipation_total(&self) -> u64 {
        self.links
            .iter()
            .map(|&(i, j)| i.saturating_sub(j) as u64)
            .sum()
    }
}

impl fmt::Display for Alignment {
    /// Pharaoh encoding in canonical (sorted, deduplicated) order.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, (i, j)) in self.links.iter().enumerate() {
            if n > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{i}-{j}")?;
        }
        Ok(())
    }
}

/// Parses one Pharaoh line (`i-j` pairs separated by whitespace; blank is
/// allowed) and checks every link against the sentence lengths.
pub fn parse_pharaoh(
    line: &str,
    source_len: usize,
    target_len: usize,
) -> Result<Alignment, AlignmentError> {
    let mut links = Vec::new();
    for field in line.split_whitespace() {
        let malformed = || AlignmentError::Malformed {
            field: field.to_string(),
        };
        let (i, j) = field.split_once('-').ok_or_else(malformed)?;
        // usize::from_str accepts a leading '+'; only plain digits are links
        let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
        if !digits(i) || !digits(j) {
            return Err(malformed());
        }
        let i: usize = i.parse().map_err(|_| malformed())?;
        let j: usize = j.parse().map_err(|_| malformed())?;
        links.push((i, j));
    }
    Alignment::new(links, source_len, target_len)
}

/// Average Anticipation of one aligned pair.
pub fn aa(alignment: &Alignment) -> Result<f64, AlignmentError> {
    if alignment.is_empty() {
        return Err(AlignmentError::EmptyAlignment);
    }
    Ok(alignment.anticipation_total() as f64 / alignment.len() as f64)
}

/// True iff no link has `i > j`, i.e. AA is exactly zero.
pub fn is_monotonic(alignment: &Alignment) -> Result<bool, AlignmentError> {
    if alignment.is_empty() {
        return Err(AlignmentError::EmptyAlignment);
    }
    Ok(alignment.links().all(|(i, j)| i <= j))
}
