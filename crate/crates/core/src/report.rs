//! Metric reports and the number formatting shared by every text output.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

/// Per-sentence metric values, corpus aggregates and a description of the
/// inputs that produced them.
///
/// Aggregates written by [`MetricReport::aggregate_mean`] are the arithmetic
/// mean of the named per-sentence value over the sentences that carry it,
/// summed in insertion order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub per_sentence: IndexMap<String, IndexMap<String, f64>>,
    pub corpus: IndexMap<String, f64>,
    pub inputs: IndexMap<String, String>,
}

impl MetricReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, id: &str, metric: &str, value: f64) {
        self.per_sentence
            .entry(id.to_string())
            .or_default()
            .insert(metric.to_string(), value);
    }

    pub fn input(&mut self, key: &str, value: impl Into<String>) {
        self.inputs.insert(key.to_string(), value.into());
    }

    /// Mean and count of `metric` over the sentences that have it.
    pub fn mean_of(&self, metric: &str) -> Option<(f64, usize)> {
        let (sum, count) = self
            .per_sentence
            .values()
            .filter_map(|m| m.get(metric))
            .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
        (count > 0).then(|| (sum / count as f64, count))
    }

    /// Stores `mean_<metric>` and `count_<metric>` in the corpus section.
    /// Nothing is stored for the mean when no sentence has the metric.
    pub fn aggregate_mean(&mut self, metric: &str) {
        match self.mean_of(metric) {
            Some((mean, count)) => {
                self.corpus.insert(format!("mean_{metric}"), mean);
                self.corpus.insert(format!("count_{metric}"), count as f64);
            }
            None => {
                self.corpus.insert(format!("count_{metric}"), 0.0);
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }
}

/// Corpus summary emitted next to a per-sentence TSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub metric: String,
    pub mean: Option<f64>,
    pub count: usize,
    pub skipped: usize,
    pub parameters: IndexMap<String, String>,
}

impl CorpusSummary {
    pub fn from_values(metric: &str, values: &[f64], skipped: usize) -> Self {
        let count = values.len();
        let mean = (count > 0).then(|| values.iter().sum::<f64>() / count as f64);
        CorpusSummary {
            metric: metric.to_string(),
            mean,
            count,
            skipped,
            parameters: IndexMap::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serialization is infallible")
    }
}

/// Shortest round-trip decimal, always with a fractional part (`3.0`,
/// `0.3333333333333333`).
pub fn fmt_real(v: f64) -> String {
    format!("{v:?}")
}

/// Four-decimal score for machine-readable output.
pub fn fmt_score(v: f64) -> String {
    format!("{v:.4}")
}
