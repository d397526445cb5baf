//! Exact-match accuracy and Levenshtein distance.

use serde::{Deserialize, Serialize};

use crate::corpus::InflectionSample;
use crate::encoding::{decode_output, encode_source, Vocabulary};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::nn::Scalar;

/// Minimum number of single-character insertions, deletions and
/// substitutions transforming `a` into `b`, over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, &ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = diag + usize::from(ca != cb);
            diag = row[j + 1];
            row[j + 1] = sub.min(diag + 1).min(row[j] + 1);
        }
    }
    row[b.len()]
}

/// Per-language evaluation result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub language: String,
    /// Exact-match accuracy in percent, 0..=100.
    pub accuracy: f64,
    pub mean_levenshtein: f64,
    pub n: usize,
}

impl MetricsReport {
    /// Aggregates predictions against gold forms.
    pub fn from_predictions(language: &str, pairs: &[(String, String)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyInput("evaluation over no samples".into()));
        }
        let n = pairs.len();
        let exact = pairs.iter().filter(|(pred, gold)| pred == gold).count();
        let total_dist: usize = pairs
            .iter()
            .map(|(pred, gold)| levenshtein(pred, gold))
            .sum();
        Ok(Self {
            language: language.to_string(),
            accuracy: 100.0 * exact as f64 / n as f64,
            mean_levenshtein: total_dist as f64 / n as f64,
            n,
        })
    }

    /// One TSV row: language, accuracy, mean distance, sample count.
    pub fn tsv_row(&self) -> String {
        format!(
            "{}\t{:.2}\t{:.4}\t{}",
            self.language, self.accuracy, self.mean_levenshtein, self.n
        )
    }
}

pub const METRICS_TSV_HEADER: &str = "language\taccuracy\tmean_levenshtein\tn";

/// Greedy-decodes every dev sample and reports exact-match accuracy and
/// mean Levenshtein distance. Order of `dev` does not affect the result.
pub fn evaluate<S: Scalar>(
    params: &ModelParams<S>,
    dev: &[InflectionSample],
    vocab: &Vocabulary,
) -> Result<MetricsReport> {
    let first = dev
        .first()
        .ok_or_else(|| Error::EmptyInput("evaluation over no samples".into()))?;
    let sources: Vec<Vec<usize>> = dev.iter().map(|s| encode_source(s, vocab)).collect();
    let decoded = crate::model::greedy_decode_batch(params, &sources)?;
    let mut pairs = Vec::with_capacity(dev.len());
    for (ids, sample) in decoded.iter().zip(dev) {
        pairs.push((decode_output(ids, vocab)?, sample.form.clone()));
    }
    MetricsReport::from_predictions(&first.language, &pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_strings_have_zero_distance() {
        assert_eq!(levenshtein("izar", "izar"), 0);
    }

    #[test]
    fn distance_to_empty_is_length() {
        assert_eq!(levenshtein("abc", ""), 3);
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(levenshtein("", ""), 0);
    }

    #[test]
    fn kitten_sitting() {
        assert_eq!(levenshtein("kitten", "sitting"), 3);
    }

    #[test]
    fn counts_unicode_scalars_not_bytes() {
        assert_eq!(levenshtein("izaríais", "izariais"), 1);
    }

    #[test]
    fn report_aggregates() {
        let pairs = vec![
            ("izar".to_string(), "izar".to_string()),
            ("izab".to_string(), "izar".to_string()),
        ];
        let r = MetricsReport::from_predictions("spa", &pairs).unwrap();
        assert_eq!(r.n, 2);
        assert!((r.accuracy - 50.0).abs() < 1e-12);
        assert!((r.mean_levenshtein - 0.5).abs() < 1e-12);
    }

    #[test]
    fn empty_predictor_mean_distance_is_mean_target_length() {
        let golds = ["ab", "abcd", "x"];
        let pairs: Vec<(String, String)> = golds
            .iter()
            .map(|g| (String::new(), g.to_string()))
            .collect();
        let r = MetricsReport::from_predictions("spa", &pairs).unwrap();
        let mean_len = golds.iter().map(|g| g.len()).sum::<usize>() as f64 / golds.len() as f64;
        assert!((r.mean_levenshtein - mean_len).abs() < 1e-12);
        assert_eq!(r.accuracy, 0.0);
    }

    #[test]
    fn perfect_predictor() {
        let pairs = vec![("a".to_string(), "a".to_string())];
        let r = MetricsReport::from_predictions("spa", &pairs).unwrap();
        assert_eq!(r.accuracy, 100.0);
        assert_eq!(r.mean_levenshtein, 0.0);
    }

    #[test]
    fn accuracy_is_multiple_of_100_over_n() {
        let pairs: Vec<(String, String)> = (0..7)
            .map(|i| {
                let g = format!("w{i}");
                if i % 3 == 0 {
                    (g.clone(), g)
                } else {
                    (String::from("x"), g)
                }
            })
            .collect();
        let r = MetricsReport::from_predictions("spa", &pairs).unwrap();
        let step = 100.0 / 7.0;
        let k = (r.accuracy / step).round();
        assert!((r.accuracy - k * step).abs() < 1e-9);
    }
}
