//! Play-log ingestion: parsing, rare-artist filtering, train/test splitting
//! and session segmentation.

mod dataset_io;
mod parse;
mod segment;

use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use dataset_io::{read_dataset, read_dataset_file, write_dataset, write_dataset_file};
pub use parse::{parse_play_logs, ColumnMap, FormatConfig, ParseOutcome, TimestampFormat};
pub use segment::{filter_rare_artists, segment_sessions, split_train_test, SessionGap, Split};

/// One play event: `user` played a song by `artist` at `timestamp`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlayLog {
    pub user_id: String,
    pub artist_id: String,
    pub timestamp: DateTime<Utc>,
}

impl PlayLog {
    pub fn new(user_id: impl Into<String>, artist_id: impl Into<String>, timestamp: DateTime<Utc>) -> Self {
        PlayLog {
            user_id: user_id.into(),
            artist_id: artist_id.into(),
            timestamp,
        }
    }
}

/// A maximal run of one user's plays whose adjacent gaps are all below the
/// session gap.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub user_id: String,
    pub logs: Vec<PlayLog>,
}

impl Session {
    pub fn len(&self) -> usize {
        self.logs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logs.is_empty()
    }

    pub fn start(&self) -> DateTime<Utc> {
        self.logs[0].timestamp
    }

    pub fn end(&self) -> DateTime<Utc> {
        self.logs[self.logs.len() - 1].timestamp
    }
}

/// All sessions of one user in chronological order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserSessions {
    pub user_id: String,
    pub sessions: Vec<Session>,
}

impl UserSessions {
    pub fn num_logs(&self) -> usize {
        self.sessions.iter().map(Session::len).sum()
    }

    pub fn logs(&self) -> impl Iterator<Item = &PlayLog> {
        self.sessions.iter().flat_map(|s| s.logs.iter())
    }
}

/// Per-user session lists, ordered by user id, plus the sorted artist
/// vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SessionizedDataset {
    pub users: Vec<UserSessions>,
    pub artists: Vec<String>,
}

impl SessionizedDataset {
    /// Builds the dataset from per-user session lists; users are sorted by
    /// id and the artist vocabulary is derived from the logs.
    pub fn from_users(mut users: Vec<UserSessions>) -> Self {
        users.retain(|u| !u.sessions.is_empty());
        users.sort_by(|a, b| a.user_id.cmp(&b.user_id));
        let artists: BTreeSet<&str> = users
            .iter()
            .flat_map(|u| u.logs())
            .map(|l| l.artist_id.as_str())
            .collect();
        let artists = artists.into_iter().map(str::to_owned).collect();
        SessionizedDataset { users, artists }
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_artists(&self) -> usize {
        self.artists.len()
    }

    pub fn num_sessions(&self) -> usize {
        self.users.iter().map(|u| u.sessions.len()).sum()
    }

    pub fn num_logs(&self) -> usize {
        self.users.iter().map(UserSessions::num_logs).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.num_logs() == 0
    }

    pub fn logs(&self) -> impl Iterator<Item = &PlayLog> {
        self.users.iter().flat_map(UserSessions::logs)
    }

    pub fn user_ids(&self) -> impl Iterator<Item = &str> {
        self.users.iter().map(|u| u.user_id.as_str())
    }

    pub fn artist_index(&self, artist: &str) -> Option<usize> {
        self.artists.binary_search_by(|a| a.as_str().cmp(artist)).ok()
    }

    /// Hex SHA-256 over the canonical line serialization, truncated to 16
    /// characters.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for (user, r, j, log) in self.rows() {
            hasher.update(user.as_bytes());
            hasher.update([0]);
            hasher.update(r.to_le_bytes());
            hasher.update(j.to_le_bytes());
            hasher.update(log.artist_id.as_bytes());
            hasher.update([0]);
            hasher.update(log.timestamp.timestamp().to_le_bytes());
        }
        let digest = hasher.finalize();
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Every log with its user id, session ordinal and position, in
    /// canonical order.
    pub fn rows(&self) -> impl Iterator<Item = (&str, u64, u64, &PlayLog)> {
        self.users.iter().flat_map(|u| {
            u.sessions.iter().enumerate().flat_map(move |(r, s)| {
                s.logs
                    .iter()
                    .enumerate()
                    .map(move |(j, l)| (u.user_id.as_str(), r as u64, j as u64, l))
            })
        })
    }
}
