use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::QueryLogEntry;

/// Largest gap, in seconds, between consecutive hits of one session.
pub const SESSION_GAP_SECS: i64 = 30 * 60;

/// Time-ordered hits from one source with no gap above [`SESSION_GAP_SECS`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub source_key: String,
    pub entries: Vec<QueryLogEntry>,
}

/// Groups entries by source key and cuts wherever the gap to the previous
/// hit is strictly greater than 30 minutes.
///
/// Entries without a timestamp each form a singleton session. Sessions are
/// returned ordered by source key, then by time.
pub fn sessionize(entries: Vec<QueryLogEntry>) -> Vec<Session> {
    let mut by_key: BTreeMap<String, Vec<QueryLogEntry>> = BTreeMap::new();
    for e in entries {
        by_key.entry(e.source_key.clone()).or_default().push(e);
    }

    let mut sessions = Vec::new();
    for (key, mut hits) in by_key {
        // stable: equal timestamps keep log order
        hits.sort_by_key(|e| e.timestamp);
        let mut current: Vec<QueryLogEntry> = Vec::new();
        for hit in hits {
            let cut = match (current.last().and_then(|p| p.timestamp), hit.timestamp) {
                (Some(prev), Some(now)) => (now - prev).num_seconds() > SESSION_GAP_SECS,
                _ => !current.is_empty(),
            };
            if cut {
                sessions.push(Session {
                    source_key: key.clone(),
                    entries: std::mem::take(&mut current),
                });
            }
            current.push(hit);
        }
        if !current.is_empty() {
            sessions.push(Session {
                source_key: key,
                entries: current,
            });
        }
    }
    sessions
}

/// Picks one entry uniformly at random from every session.
pub fn sample_one_per_session(sessions: &[Session], seed: u64) -> Vec<QueryLogEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sessions
        .iter()
        .filter(|s| !s.entries.is_empty())
        .map(|s| s.entries[rng.gen_range(0..s.entries.len())].clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use chrono::{DateTime, Duration, Utc};

    use super::*;

    fn at(key: &str, t: DateTime<Utc>, stmt: &str) -> QueryLogEntry {
        let mut e = QueryLogEntry::new(stmt);
        e.source_key = key.into();
        e.timestamp = Some(t);
        e
    }

    fn t0() -> DateTime<Utc> {
        "2008-03-01T12:00:00Z".parse().unwrap()
    }

    #[test]
    fn gaps_under_threshold_stay_together() {
        let t = t0();
        let entries = vec![
            at("a", t, "q1"),
            at("a", t + Duration::minutes(10), "q2"),
            at("a", t + Duration::minutes(39), "q3"),
        ];
        let s = sessionize(entries);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].entries.len(), 3);
    }

    #[test]
    fn gap_over_threshold_splits() {
        let t = t0();
        let entries = vec![
            at("a", t, "q1"),
            at("a", t + Duration::minutes(10), "q2"),
            at("a", t + Duration::minutes(41), "q3"),
        ];
        let sizes: Vec<_> = sessionize(entries).iter().map(|s| s.entries.len()).collect();
        assert_eq!(sizes, vec![2, 1]);
    }

    #[test]
    fn exactly_thirty_minutes_stays_in_session() {
        let t = t0();
        let s = sessionize(vec![at("a", t, "q1"), at("a", t + Duration::seconds(1800), "q2")]);
        assert_eq!(s.len(), 1);
        let s = sessionize(vec![at("a", t, "q1"), at("a", t + Duration::seconds(1801), "q2")]);
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn interleaved_keys_never_mix() {
        let t = t0();
        let entries: Vec<_> = (0..6)
            .map(|i| at(if i % 2 == 0 { "x" } else { "y" }, t + Duration::minutes(i), "q"))
            .collect();
        let s = sessionize(entries);
        assert_eq!(s.len(), 2);
        for sess in &s {
            assert!(sess.entries.iter().all(|e| e.source_key == sess.source_key));
        }
    }

    #[test]
    fn unsorted_input_is_ordered() {
        let t = t0();
        let s = sessionize(vec![at("a", t + Duration::minutes(5), "late"), at("a", t, "early")]);
        assert_eq!(s[0].entries[0].statement, "early");
    }

    #[test]
    fn missing_timestamps_give_singletons() {
        let s = sessionize(vec![QueryLogEntry::new("a"), QueryLogEntry::new("b")]);
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn empty_input() {
        assert!(sessionize(Vec::new()).is_empty());
    }

    #[test]
    fn sampling_is_one_per_session_and_seeded() {
        let t = t0();
        let mut entries = Vec::new();
        for k in 0..5 {
            for i in 0..4 {
                entries.push(at(&format!("k{k}"), t + Duration::minutes(i), &format!("q{k}{i}")));
            }
        }
        let sessions = sessionize(entries);
        let a = sample_one_per_session(&sessions, 7);
        let b = sample_one_per_session(&sessions, 7);
        assert_eq!(a.len(), 5);
        assert_eq!(a, b);
    }

    #[test]
    fn singleton_sessions_are_forced() {
        let sessions = sessionize(vec![QueryLogEntry::new("only")]);
        for seed in 0..10 {
            assert_eq!(sample_one_per_session(&sessions, seed)[0].statement, "only");
        }
    }
}
