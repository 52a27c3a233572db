pub mod errors;
pub mod evaluate;
pub mod extract;
pub mod optimize;
pub mod peephole;
pub mod sweep;

use std::path::Path;

use peepeval::corpus::Dataset;
use serde::{Deserialize, Serialize};

use crate::AppError;

/// One generated candidate, persisted separately from metrics so model
/// calls never re-run just to re-score.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub id: String,
    pub candidate: String,
    pub latency_ms: u64,
}

pub fn load_dataset(path: &Path) -> Result<Dataset, AppError> {
    peepeval::corpus::load_dataset(path).map_err(|e| AppError::Input(e.to_string()))
}

pub fn load_candidates(path: &Path) -> Result<Vec<CandidateRecord>, AppError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::Input(format!("{}: {e}", path.display())))?;
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: CandidateRecord = serde_json::from_str(line)
            .map_err(|e| AppError::Input(format!("{}: line {}: {e}", path.display(), idx + 1)))?;
        records.push(record);
    }
    Ok(records)
}
