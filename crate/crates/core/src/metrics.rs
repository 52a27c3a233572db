//! The four evaluation metrics: BLEU, exact-match rate, syntactic accuracy,
//! and IO accuracy, plus their aggregation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asm::{parse_block, print_block, validate_block};
use crate::interp::{io_equivalent, EquivalenceVerdict};

/// BLEU parameter set identifier stamped into every report: n-grams up to 4,
/// uniform weights, add-one smoothing for higher orders, assembly-aware
/// tokenization.
pub const BLEU_CONFIG: &str = "bleu-a4-uniform";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("cannot aggregate an empty record list")]
    EmptyInput,
}

/// Tokenize assembly text for BLEU: split on whitespace, with each of
/// `,` `[` `]` `#` `:` kept as its own token.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\\' if chars.peek() == Some(&'n') => {
                chars.next();
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
            }
            ',' | '[' | ']' | '#' | ':' => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
                tokens.push(c.to_string());
            }
            _ => cur.push(c),
        }
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }
    tokens
}

fn ngram_counts(tokens: &[String], n: usize) -> std::collections::HashMap<&[String], usize> {
    let mut counts = std::collections::HashMap::new();
    if tokens.len() >= n {
        for window in tokens.windows(n) {
            *counts.entry(window).or_insert(0) += 1;
        }
    }
    counts
}

/// Sentence BLEU with n-grams up to 4, uniform weights, clipped modified
/// precision, and brevity penalty `exp(1 - r/c)` when the candidate is
/// shorter than the reference. Orders longer than the candidate are skipped;
/// a zero precision at order >= 2 is smoothed add-one; zero unigram
/// precision yields 0 outright.
pub fn bleu(candidate: &str, reference: &str) -> f64 {
    let cand = tokenize(candidate);
    let reference = tokenize(reference);
    if cand.is_empty() {
        return 0.0;
    }
    let max_order = 4.min(cand.len());
    let mut log_sum = 0.0;
    let mut orders = 0usize;
    for n in 1..=max_order {
        let cand_ngrams = ngram_counts(&cand, n);
        let ref_ngrams = ngram_counts(&reference, n);
        let total: usize = cand_ngrams.values().sum();
        let matched: usize = cand_ngrams
            .iter()
            .map(|(gram, count)| (*count).min(ref_ngrams.get(gram).copied().unwrap_or(0)))
            .sum();
        let precision = if matched == 0 {
            if n == 1 {
                return 0.0;
            }
            (matched + 1) as f64 / (total + 1) as f64
        } else {
            matched as f64 / total as f64
        };
        log_sum += precision.ln();
        orders += 1;
    }
    let geo_mean = (log_sum / orders as f64).exp();
    let (c, r) = (cand.len() as f64, reference.len() as f64);
    let brevity = if c < r { (1.0 - r / c).exp() } else { 1.0 };
    brevity * geo_mean
}

/// Exact-match: canonical forms when both sides parse, otherwise raw text
/// with per-line trailing whitespace trimmed.
pub fn emr(candidate: &str, reference: &str) -> bool {
    match (parse_block(candidate), parse_block(reference)) {
        (Ok(c), Ok(r)) => print_block(&c) == print_block(&r),
        _ => normalize_raw(candidate) == normalize_raw(reference),
    }
}

fn normalize_raw(text: &str) -> String {
    crate::asm::split_lines(text)
        .iter()
        .map(|l| l.trim_end())
        .collect::<Vec<_>>()
        .join("\n")
        .trim_end()
        .to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IoOutcome {
    Pass,
    Fail,
    Uncheckable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMetrics {
    pub bleu: f64,
    pub emr: bool,
    pub syntactic: bool,
    pub io: IoOutcome,
}

/// Score one candidate against the reference-optimized text.
pub fn evaluate_sample(reference: &str, candidate: &str, trials: u64, seed: u64) -> SampleMetrics {
    let reference_block = parse_block(reference);
    let candidate_block = parse_block(candidate);

    match (reference_block, candidate_block) {
        (Ok(ref_block), Ok(cand_block)) => {
            let ref_canon = print_block(&ref_block);
            let cand_canon = print_block(&cand_block);
            let syntactic = validate_block(&cand_block).valid();
            let io = if !syntactic {
                // A block the assembler rejects cannot be IO-correct.
                IoOutcome::Fail
            } else {
                match io_equivalent(&cand_block, &ref_block, trials, seed) {
                    EquivalenceVerdict::Equivalent => IoOutcome::Pass,
                    EquivalenceVerdict::Divergent { .. } => IoOutcome::Fail,
                    EquivalenceVerdict::Uncheckable { .. } => IoOutcome::Uncheckable,
                }
            };
            SampleMetrics {
                bleu: bleu(&cand_canon, &ref_canon),
                emr: cand_canon == ref_canon,
                syntactic,
                io,
            }
        }
        // Unparseable candidate: BLEU on raw tokens, everything else fails.
        (_, _) => SampleMetrics {
            bleu: bleu(candidate, reference),
            emr: emr(candidate, reference),
            syntactic: false,
            io: IoOutcome::Fail,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub n: usize,
    pub bleu_mean: f64,
    pub emr_rate: f64,
    pub syntactic_rate: f64,
    /// Over checkable samples only.
    pub io_rate: f64,
    pub io_uncheckable: usize,
    pub bleu_config: String,
}

pub fn aggregate(records: &[SampleMetrics]) -> Result<MetricsSummary, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let n = records.len();
    // Sum in value order so the mean is invariant under record ordering.
    let mut bleus: Vec<f64> = records.iter().map(|r| r.bleu).collect();
    bleus.sort_by(f64::total_cmp);
    let bleu_mean = bleus.iter().sum::<f64>() / n as f64;
    let emr_rate = records.iter().filter(|r| r.emr).count() as f64 / n as f64;
    let syntactic_rate = records.iter().filter(|r| r.syntactic).count() as f64 / n as f64;
    let io_uncheckable = records
        .iter()
        .filter(|r| r.io == IoOutcome::Uncheckable)
        .count();
    let checkable = n - io_uncheckable;
    let io_rate = if checkable == 0 {
        0.0
    } else {
        records.iter().filter(|r| r.io == IoOutcome::Pass).count() as f64 / checkable as f64
    };
    Ok(MetricsSummary {
        n,
        bleu_mean,
        emr_rate,
        syntactic_rate,
        io_rate,
        io_uncheckable,
        bleu_config: BLEU_CONFIG.to_string(),
    })
}
