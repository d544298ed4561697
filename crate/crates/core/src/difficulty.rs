//! Task difficulty: requirement readability, entropy-weighted rating over
//! five task features, and percentile banding.
//!
//! Readability uses the Flesch Reading Ease formula with a heuristic
//! tokenizer:
//!
//! * sentences: text split on runs of `.`, `!`, `?`; segments without a
//!   word are dropped; text without any terminator is one sentence
//! * words: whitespace-separated tokens containing a letter or digit
//! * syllables: vowel groups (`aeiouy`) per word, minus one for a silent
//!   final `e` (but not `-le` after a consonant), at least one

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ClassModel;

#[derive(Debug, Error, PartialEq)]
pub enum DifficultyError {
    #[error("readability is undefined for text without words")]
    EmptyText,
    #[error("need at least 3 tasks, got {0}")]
    TooFewTasks(usize),
    #[error("every task has identical features; weights are undefined")]
    DegenerateWeights,
    #[error("task features contain a non-finite value")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskFeatures {
    pub class_count: f64,
    pub avg_attributes: f64,
    pub avg_methods: f64,
    pub relationship_count: f64,
    /// Flesch Reading Ease of the requirement text.
    pub readability: f64,
}

impl TaskFeatures {
    pub fn from_model(model: &ClassModel, requirement: &str) -> Result<Self, DifficultyError> {
        let s = model.stats();
        Ok(Self {
            class_count: s.class_count as f64,
            avg_attributes: s.avg_attributes_per_class,
            avg_methods: s.avg_methods_per_class,
            relationship_count: s.relationship_count as f64,
            readability: readability(requirement)?,
        })
    }

    fn as_array(&self) -> [f64; FEATURES] {
        [
            self.class_count,
            self.avg_attributes,
            self.avg_methods,
            self.relationship_count,
            self.readability,
        ]
    }
}

const FEATURES: usize = 5;
const READABILITY: usize = 4;

pub const FEATURE_NAMES: [&str; FEATURES] = [
    "class_count",
    "avg_attributes",
    "avg_methods",
    "relationship_count",
    "readability",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Simple,
    Moderate,
    Hard,
}

impl Band {
    pub const ALL: [Band; 3] = [Band::Simple, Band::Moderate, Band::Hard];

    pub fn label(self) -> &'static str {
        match self {
            Band::Simple => "simple",
            Band::Moderate => "moderate",
            Band::Hard => "hard",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifficultyReport {
    /// Per task, per feature, in `[0, 1]`; readability already inverted.
    pub normalized: Vec<[f64; FEATURES]>,
    pub weights: [f64; FEATURES],
    pub ratings: Vec<f64>,
    pub bands: Vec<Band>,
    /// 33rd and 67th percentiles of the ratings.
    pub thresholds: (f64, f64),
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

pub fn count_syllables(word: &str) -> usize {
    let letters: Vec<char> = word
        .chars()
        .filter(|c| c.is_alphabetic())
        .flat_map(char::to_lowercase)
        .collect();
    if letters.is_empty() {
        return 1;
    }
    let mut groups = 0;
    let mut in_group = false;
    for &c in &letters {
        let v = is_vowel(c);
        if v && !in_group {
            groups += 1;
        }
        in_group = v;
    }
    let len = letters.len();
    if groups > 1 && letters[len - 1] == 'e' {
        let consonant_le = len >= 3 && letters[len - 2] == 'l' && !is_vowel(letters[len - 3]);
        if !consonant_le {
            groups -= 1;
        }
    }
    groups.max(1)
}

fn is_word(token: &str) -> bool {
    token.chars().any(char::is_alphanumeric)
}

/// Flesch Reading Ease: `206.835 - 1.015 (words/sentences) - 84.6 (syllables/words)`.
pub fn readability(text: &str) -> Result<f64, DifficultyError> {
    let words: Vec<&str> = text.split_whitespace().filter(|t| is_word(t)).collect();
    if words.is_empty() {
        return Err(DifficultyError::EmptyText);
    }
    let sentences = text
        .split(['.', '!', '?'])
        .filter(|segment| segment.split_whitespace().any(is_word))
        .count()
        .max(1);
    let syllables: usize = words.iter().map(|w| count_syllables(w)).sum();
    let words_n = words.len() as f64;
    Ok(206.835 - 1.015 * (words_n / sentences as f64) - 84.6 * (syllables as f64 / words_n))
}

/// Linear-interpolation percentile (`q` in `[0, 100]`) of unsorted data.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Entropy-weighted difficulty ratings and bands.
///
/// Features are min-max normalized (readability inverted, so harder text
/// scores higher); a feature with zero span normalizes to 0.5 everywhere.
/// Weights come from the entropy weight method: low-entropy, high-dispersion
/// features weigh more. A task exactly on a threshold falls in the lower
/// band.
pub fn difficulty_ratings(features: &[TaskFeatures]) -> Result<DifficultyReport, DifficultyError> {
    let n = features.len();
    if n < 3 {
        return Err(DifficultyError::TooFewTasks(n));
    }
    let raw: Vec<[f64; FEATURES]> = features.iter().map(TaskFeatures::as_array).collect();
    if raw.iter().flatten().any(|v| !v.is_finite()) {
        return Err(DifficultyError::NonFinite);
    }

    let mut normalized = vec![[0.0; FEATURES]; n];
    for j in 0..FEATURES {
        let lo = raw.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min);
        let hi = raw.iter().map(|r| r[j]).fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        for (row, out) in raw.iter().zip(normalized.iter_mut()) {
            out[j] = if span == 0.0 {
                0.5
            } else if j == READABILITY {
                (hi - row[j]) / span
            } else {
                (row[j] - lo) / span
            };
        }
    }

    let ln_n = (n as f64).ln();
    let mut divergence = [0.0; FEATURES];
    for j in 0..FEATURES {
        let column_sum: f64 = normalized.iter().map(|r| r[j]).sum();
        let entropy = -normalized
            .iter()
            .map(|r| {
                let p = r[j] / column_sum;
                if p > 0.0 {
                    p * p.ln()
                } else {
                    0.0
                }
            })
            .sum::<f64>()
            / ln_n;
        divergence[j] = (1.0 - entropy).max(0.0);
    }
    let total: f64 = divergence.iter().sum();
    if total <= 1e-15 {
        return Err(DifficultyError::DegenerateWeights);
    }
    let weights = divergence.map(|d| d / total);

    let ratings: Vec<f64> = normalized
        .iter()
        .map(|row| row.iter().zip(&weights).map(|(x, w)| x * w).sum::<f64>().clamp(0.0, 1.0))
        .collect();
    let thresholds = (percentile(&ratings, 33.0), percentile(&ratings, 67.0));
    let bands = ratings.iter().map(|&r| band_for(r, thresholds)).collect();
    Ok(DifficultyReport {
        normalized,
        weights,
        ratings,
        bands,
        thresholds,
    })
}

pub fn band_for(rating: f64, (low, high): (f64, f64)) -> Band {
    if rating <= low {
        Band::Simple
    } else if rating <= high {
        Band::Moderate
    } else {
        Band::Hard
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn features(c: f64, a: f64, m: f64, r: f64, read: f64) -> TaskFeatures {
        TaskFeatures {
            class_count: c,
            avg_attributes: a,
            avg_methods: m,
            relationship_count: r,
            readability: read,
        }
    }

    #[test]
    fn syllables() {
        assert_eq!(count_syllables("The"), 1);
        assert_eq!(count_syllables("cat"), 1);
        assert_eq!(count_syllables("make"), 1);
        assert_eq!(count_syllables("table"), 2);
        assert_eq!(count_syllables("system"), 2);
        assert_eq!(count_syllables("requirement"), 4);
        assert_eq!(count_syllables("42"), 1);
    }

    #[test]
    fn the_cat_sat() {
        let v = readability("The cat sat.").unwrap();
        assert!((v - 119.19).abs() < 0.01, "{v}");
    }

    #[test]
    fn self_concatenation_is_invariant() {
        let t = "The library lends books to registered members. Each member may borrow five items!";
        let once = readability(t).unwrap();
        let twice = readability(&format!("{t} {t}")).unwrap();
        assert!((once - twice).abs() < 1e-9);
    }

    #[test]
    fn longer_sentences_read_harder() {
        let a = readability("The cat sat.").unwrap();
        let b = readability("The cat sat on a mat.").unwrap();
        assert!(b < a);
    }

    #[test]
    fn empty_text_rejected() {
        assert_eq!(readability("  ... "), Err(DifficultyError::EmptyText));
        assert_eq!(readability(""), Err(DifficultyError::EmptyText));
    }

    #[test]
    fn constant_feature_gets_zero_weight() {
        let f = vec![
            features(3.0, 2.0, 1.0, 2.0, 60.0),
            features(5.0, 2.0, 2.0, 4.0, 50.0),
            features(9.0, 2.0, 0.0, 9.0, 40.0),
        ];
        let r = difficulty_ratings(&f).unwrap();
        assert!(r.weights[1] < 1e-12);
        assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dominating_task_rates_higher() {
        let f = vec![
            features(3.0, 1.0, 1.0, 2.0, 70.0),
            features(10.0, 3.0, 4.0, 12.0, 30.0),
            features(6.0, 2.0, 2.0, 7.0, 50.0),
        ];
        let r = difficulty_ratings(&f).unwrap();
        assert!(r.ratings[1] > r.ratings[0]);
        assert_eq!(r.bands[1], Band::Hard);
        assert_eq!(r.bands[0], Band::Simple);
    }

    #[test]
    fn degenerate_inputs() {
        let same = vec![features(1.0, 1.0, 1.0, 1.0, 50.0); 4];
        assert_eq!(difficulty_ratings(&same), Err(DifficultyError::DegenerateWeights));
        assert_eq!(difficulty_ratings(&same[..2]), Err(DifficultyError::TooFewTasks(2)));
    }

    #[test]
    fn threshold_goes_to_lower_band() {
        assert_eq!(band_for(0.3, (0.3, 0.6)), Band::Simple);
        assert_eq!(band_for(0.6, (0.3, 0.6)), Band::Moderate);
        assert_eq!(band_for(0.61, (0.3, 0.6)), Band::Hard);
    }

    #[test]
    fn percentile_interpolates() {
        assert_eq!(percentile(&[4.0, 1.0, 3.0, 2.0], 50.0), 2.5);
        assert_eq!(percentile(&[1.0, 2.0, 3.0], 0.0), 1.0);
        assert_eq!(percentile(&[1.0, 2.0, 3.0], 100.0), 3.0);
    }
}
