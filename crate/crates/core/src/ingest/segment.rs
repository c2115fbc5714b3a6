use std::collections::{BTreeMap, HashMap, HashSet};

use chrono::{DateTime, TimeDelta, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{PlayLog, Session, SessionizedDataset, UserSessions};
use crate::error::{Error, Result};

/// Minimum gap separating two sessions. Always positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SessionGap(i64);

impl SessionGap {
    pub fn from_seconds(seconds: i64) -> Result<Self> {
        if seconds <= 0 {
            return Err(Error::config("gap-minutes", "session gap must be positive"));
        }
        Ok(SessionGap(seconds))
    }

    pub fn from_minutes(minutes: f64) -> Result<Self> {
        if !(minutes.is_finite() && minutes > 0.0) {
            return Err(Error::config("gap-minutes", "session gap must be positive"));
        }
        Self::from_seconds((minutes * 60.0).round() as i64)
    }

    pub fn seconds(self) -> i64 {
        self.0
    }

    pub fn as_delta(self) -> TimeDelta {
        TimeDelta::seconds(self.0)
    }

    /// Whether two consecutive timestamps belong to the same session.
    pub fn joins(self, earlier: DateTime<Utc>, later: DateTime<Utc>) -> bool {
        later - earlier < self.as_delta()
    }
}

impl Default for SessionGap {
    fn default() -> Self {
        SessionGap(30 * 60)
    }
}

/// Removes every log of an artist played by at most `min_users` distinct
/// users. Survivors keep their order.
pub fn filter_rare_artists(logs: &[PlayLog], min_users: usize) -> Vec<PlayLog> {
    let mut listeners: HashMap<&str, HashSet<&str>> = HashMap::new();
    for log in logs {
        listeners
            .entry(log.artist_id.as_str())
            .or_default()
            .insert(log.user_id.as_str());
    }
    logs.iter()
        .filter(|l| listeners[l.artist_id.as_str()].len() > min_users)
        .cloned()
        .collect()
}

/// Groups logs per user, sorts each user's logs by time (stable) and cuts a
/// new session wherever the gap to the previous log reaches `gap`.
pub fn segment_sessions(logs: &[PlayLog], gap: SessionGap) -> SessionizedDataset {
    let mut per_user: BTreeMap<&str, Vec<&PlayLog>> = BTreeMap::new();
    for log in logs {
        per_user.entry(log.user_id.as_str()).or_default().push(log);
    }
    let groups: Vec<(&str, Vec<&PlayLog>)> = per_user.into_iter().collect();
    let users: Vec<UserSessions> = groups
        .into_par_iter()
        .map(|(user, mut logs)| {
            logs.sort_by_key(|l| l.timestamp);
            let mut sessions: Vec<Session> = Vec::new();
            let mut current: Vec<PlayLog> = Vec::new();
            for log in logs {
                if let Some(prev) = current.last() {
                    if !gap.joins(prev.timestamp, log.timestamp) {
                        sessions.push(Session {
                            user_id: user.to_owned(),
                            logs: std::mem::take(&mut current),
                        });
                    }
                }
                current.push(log.clone());
            }
            if !current.is_empty() {
                sessions.push(Session {
                    user_id: user.to_owned(),
                    logs: current,
                });
            }
            UserSessions {
                user_id: user.to_owned(),
                sessions,
            }
        })
        .collect();
    SessionizedDataset::from_users(users)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<PlayLog>,
    pub test: Vec<PlayLog>,
    pub warnings: Vec<String>,
}

/// Logs strictly before `boundary` go to train, the rest to test.
pub fn split_train_test(logs: &[PlayLog], boundary: DateTime<Utc>) -> Split {
    let (train, test): (Vec<PlayLog>, Vec<PlayLog>) = logs.iter().cloned().partition(|l| l.timestamp < boundary);
    let mut warnings = Vec::new();
    if train.is_empty() {
        warnings.push(format!("training split is empty (boundary {boundary})"));
    }
    if test.is_empty() {
        warnings.push(format!("test split is empty (boundary {boundary})"));
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Split { train, test, warnings }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;
    use proptest::prelude::*;

    fn at(min: i64) -> DateTime<Utc> {
        Utc.timestamp_opt(1_357_000_000 + min * 60, 0).unwrap()
    }

    fn log(user: &str, artist: &str, min: i64) -> PlayLog {
        PlayLog::new(user, artist, at(min))
    }

    #[test]
    fn rare_artist_boundary_is_inclusive() {
        let logs = vec![
            log("u1", "x", 0),
            log("u2", "x", 0),
            log("u3", "x", 0),
            log("u3", "x", 5),
        ];
        assert!(filter_rare_artists(&logs, 3).is_empty());
    }

    #[test]
    fn artist_with_four_users_survives() {
        let logs: Vec<_> = (0..4).map(|i| log(&format!("u{i}"), "y", i)).collect();
        assert_eq!(filter_rare_artists(&logs, 3), logs);
    }

    #[test]
    fn min_users_zero_keeps_everything() {
        let logs = vec![log("u1", "z", 0)];
        assert_eq!(filter_rare_artists(&logs, 0), logs);
    }

    #[test]
    fn gap_below_threshold_joins() {
        let ds = segment_sessions(&[log("u", "a", 0), log("u", "b", 29)], SessionGap::default());
        assert_eq!(ds.users[0].sessions.len(), 1);
        assert_eq!(ds.users[0].sessions[0].len(), 2);
    }

    #[test]
    fn gap_of_exactly_thirty_minutes_splits() {
        let ds = segment_sessions(&[log("u", "a", 0), log("u", "b", 30)], SessionGap::default());
        let sizes: Vec<_> = ds.users[0].sessions.iter().map(Session::len).collect();
        assert_eq!(sizes, vec![1, 1]);
    }

    #[test]
    fn singleton_session() {
        let ds = segment_sessions(&[log("u", "a", 0)], SessionGap::default());
        assert_eq!(ds.num_sessions(), 1);
        assert_eq!(ds.users[0].sessions[0].len(), 1);
    }

    #[test]
    fn identical_timestamps_keep_input_order() {
        let ds = segment_sessions(
            &[log("u", "b", 10), log("u", "a", 5), log("u", "c", 5)],
            SessionGap::default(),
        );
        let artists: Vec<_> = ds.logs().map(|l| l.artist_id.as_str()).collect();
        assert_eq!(artists, vec!["a", "c", "b"]);
        assert_eq!(ds.num_sessions(), 1);
    }

    #[test]
    fn users_ordered_by_id() {
        let ds = segment_sessions(&[log("zz", "a", 0), log("aa", "a", 0)], SessionGap::default());
        assert_eq!(ds.user_ids().collect::<Vec<_>>(), vec!["aa", "zz"]);
    }

    #[test]
    fn split_threshold() {
        let day = 24 * 60;
        let logs = vec![log("u", "a", day), log("u", "a", 10 * day), log("u", "a", 40 * day)];
        let s = split_train_test(&logs, at(28 * day));
        assert_eq!(s.train.len(), 2);
        assert_eq!(s.test.len(), 1);
        assert!(s.warnings.is_empty());

        let before = split_train_test(&logs, at(0));
        assert!(before.train.is_empty());
        assert_eq!(before.test.len(), 3);
        assert_eq!(before.warnings.len(), 1);

        let after = split_train_test(&logs, at(100 * day));
        assert_eq!(after.train.len(), 3);
        assert!(after.test.is_empty());
        assert_eq!(after.warnings.len(), 1);
    }

    #[test]
    fn non_positive_gap_rejected() {
        assert!(SessionGap::from_minutes(0.0).is_err());
        assert!(SessionGap::from_seconds(-5).is_err());
    }

    fn arb_logs() -> impl Strategy<Value = Vec<PlayLog>> {
        prop::collection::vec((0u8..4, 0u8..6, 0i64..600), 0..80).prop_map(|v| {
            v.into_iter()
                .map(|(u, a, m)| log(&format!("u{u}"), &format!("a{a}"), m))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn sessions_round_trip_and_respect_gap(logs in arb_logs(), gap_min in 1i64..90) {
            let gap = SessionGap::from_seconds(gap_min * 60).unwrap();
            let ds = segment_sessions(&logs, gap);
            prop_assert_eq!(ds.num_logs(), logs.len());
            for user in &ds.users {
                let mut expected: Vec<&PlayLog> =
                    logs.iter().filter(|l| l.user_id == user.user_id).collect();
                expected.sort_by_key(|l| l.timestamp);
                let got: Vec<&PlayLog> = user.logs().collect();
                prop_assert_eq!(got, expected);
                for s in &user.sessions {
                    prop_assert!(!s.is_empty());
                    for w in s.logs.windows(2) {
                        prop_assert!(w[1].timestamp - w[0].timestamp < gap.as_delta());
                        prop_assert!(w[0].timestamp <= w[1].timestamp);
                    }
                }
                for w in user.sessions.windows(2) {
                    prop_assert!(w[1].start() - w[0].end() >= gap.as_delta());
                }
            }
        }

        #[test]
        fn rare_filter_idempotent(logs in arb_logs(), min_users in 0usize..4) {
            let once = filter_rare_artists(&logs, min_users);
            let twice = filter_rare_artists(&once, min_users);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn segmentation_deterministic(logs in arb_logs()) {
            let a = segment_sessions(&logs, SessionGap::default());
            let b = segment_sessions(&logs, SessionGap::default());
            prop_assert_eq!(a, b);
        }
    }
}
