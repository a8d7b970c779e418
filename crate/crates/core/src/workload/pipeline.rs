use serde::{Deserialize, Serialize};

use super::{dedup_and_aggregate, sample_one_per_session, sessionize, split, DatasetSplit, Fractions, QueryLogEntry, Setting};
use crate::sqltext::parse_syntactic_profile;
use crate::Result;

/// Row counts through the ingest stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineStats {
    pub entries: usize,
    pub sessions: usize,
    pub sampled: usize,
    pub unique_statements: usize,
    /// Sampled entries per unique statement.
    pub dedup_ratio: f64,
}

/// Sessionize, sample one entry per session, deduplicate, profile and split.
pub fn build_dataset(entries: Vec<QueryLogEntry>, setting: Setting, fractions: Fractions, seed: u64) -> Result<(DatasetSplit, PipelineStats)> {
    let n_entries = entries.len();
    let sessions = sessionize(entries);
    let sampled = sample_one_per_session(&sessions, seed);
    let mut unique = dedup_and_aggregate(&sampled, seed);
    for q in &mut unique {
        q.profile = Some(parse_syntactic_profile(&q.statement));
    }
    let stats = PipelineStats {
        entries: n_entries,
        sessions: sessions.len(),
        sampled: sampled.len(),
        unique_statements: unique.len(),
        dedup_ratio: if unique.is_empty() { 0.0 } else { sampled.len() as f64 / unique.len() as f64 },
    };
    Ok((split(unique, setting, fractions, seed)?, stats))
}
