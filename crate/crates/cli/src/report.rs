//! Report provenance: every artifact embeds the run configuration, the
//! dataset manifest fingerprint, and the tool version, so two runs over
//! equal inputs produce byte-identical reports.

use std::collections::BTreeMap;
use std::path::Path;

use peepeval::metrics::MetricsSummary;
use serde::Serialize;

use crate::AppError;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub tool_version: String,
    pub command: String,
    pub dataset: Option<String>,
    pub adapter: Option<String>,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub shots: Option<usize>,
    pub trials: Option<u64>,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub out: String,
    pub min_samples: Option<u64>,
    pub max_lines: Option<usize>,
    pub synthetic: Option<usize>,
}

impl RunConfig {
    pub fn new(command: &str, out: &Path, seed: u64) -> RunConfig {
        RunConfig {
            tool_version: TOOL_VERSION.to_string(),
            command: command.to_string(),
            dataset: None,
            adapter: None,
            endpoint: None,
            model: None,
            shots: None,
            trials: None,
            seed,
            jobs: None,
            out: out.display().to_string(),
            min_samples: None,
            max_lines: None,
            synthetic: None,
        }
    }
}

/// Fingerprint of the dataset manifest sidecar.
pub fn manifest_fingerprint(dataset_path: &Path) -> String {
    let manifest = peepeval::corpus::manifest_path(dataset_path);
    match std::fs::read_to_string(manifest) {
        Ok(text) => format!("{:016x}", peepeval::rng::hash_str(&text)),
        Err(_) => "absent".to_string(),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), AppError> {
    let body = serde_json::to_string_pretty(value)?;
    std::fs::write(path, body + "\n")?;
    Ok(())
}

pub fn write_jsonl<T: Serialize>(path: &Path, values: &[T]) -> Result<(), AppError> {
    let mut body = String::new();
    for value in values {
        body.push_str(&serde_json::to_string(value)?);
        body.push('\n');
    }
    std::fs::write(path, body)?;
    Ok(())
}

/// Text table shaped like the model-performance figures: one row per source
/// tag and an ALL row.
pub fn render_summary_table(
    overall: &MetricsSummary,
    per_source: &BTreeMap<String, MetricsSummary>,
) -> String {
    let mut out = String::from(
        "source               n    BLEU    EMR     Syntactic  IO      IO-uncheckable\n",
    );
    let mut row = |name: &str, s: &MetricsSummary| {
        out.push_str(&format!(
            "{:<18} {:>5}  {:>6.4}  {:>6.4}  {:>9.4}  {:>6.4}  {:>5}\n",
            name, s.n, s.bleu_mean, s.emr_rate, s.syntactic_rate, s.io_rate, s.io_uncheckable
        ));
    };
    for (tag, summary) in per_source {
        row(tag, summary);
    }
    row("ALL", overall);
    out
}
