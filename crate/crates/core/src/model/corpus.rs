use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::SessionizedDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSpan {
    pub user: u32,
    /// Index of the first log in the flat log arrays.
    pub start: u32,
    pub len: u32,
}

impl SessionSpan {
    pub fn logs(&self) -> Range<usize> {
        self.start as usize..(self.start + self.len) as usize
    }
}

/// Index-encoded training data. Sessions are stored user-major and
/// chronologically, logs are flattened in the same order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub users: Vec<String>,
    pub artists: Vec<String>,
    pub sessions: Vec<SessionSpan>,
    /// Per user, the range of its sessions in `sessions`.
    pub user_sessions: Vec<Range<u32>>,
    pub log_artist: Vec<u32>,
    /// Unix seconds, UTC.
    pub log_time: Vec<i64>,
}

impl Corpus {
    pub fn from_dataset(dataset: &SessionizedDataset) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::Empty("dataset has no logs".into()));
        }
        let n_logs = dataset.num_logs();
        if n_logs > u32::MAX as usize {
            return Err(Error::config("input", "too many logs"));
        }
        let mut corpus = Corpus {
            users: Vec::with_capacity(dataset.num_users()),
            artists: dataset.artists.clone(),
            sessions: Vec::with_capacity(dataset.num_sessions()),
            user_sessions: Vec::with_capacity(dataset.num_users()),
            log_artist: Vec::with_capacity(n_logs),
            log_time: Vec::with_capacity(n_logs),
        };
        for user in &dataset.users {
            let u = corpus.users.len() as u32;
            let first = corpus.sessions.len() as u32;
            for session in &user.sessions {
                let start = corpus.log_artist.len() as u32;
                for log in &session.logs {
                    let a = dataset
                        .artist_index(&log.artist_id)
                        .expect("artist vocabulary is derived from the logs");
                    corpus.log_artist.push(a as u32);
                    corpus.log_time.push(log.timestamp.timestamp());
                }
                corpus.sessions.push(SessionSpan {
                    user: u,
                    start,
                    len: session.logs.len() as u32,
                });
            }
            corpus.users.push(user.user_id.clone());
            corpus.user_sessions.push(first..corpus.sessions.len() as u32);
        }
        Ok(corpus)
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_artists(&self) -> usize {
        self.artists.len()
    }

    pub fn num_sessions(&self) -> usize {
        self.sessions.len()
    }

    pub fn num_logs(&self) -> usize {
        self.log_artist.len()
    }

    /// Global index of session `r` of user `u`.
    pub fn session_index(&self, user: usize, ordinal: usize) -> Option<usize> {
        let range = self.user_sessions.get(user)?;
        let s = range.start as usize + ordinal;
        (s < range.end as usize).then_some(s)
    }

    /// Global index of position `j` in session `r` of user `u`.
    pub fn log_index(&self, user: usize, ordinal: usize, position: usize) -> Option<usize> {
        let span = self.sessions[self.session_index(user, ordinal)?];
        (position < span.len as usize).then(|| span.start as usize + position)
    }

    pub fn user_of_log(&self, log: usize) -> usize {
        let s = self.session_of_log(log);
        self.sessions[s].user as usize
    }

    pub fn session_of_log(&self, log: usize) -> usize {
        self.sessions.partition_point(|s| s.start as usize <= log) - 1
    }

    /// Per log, the owning user; cheaper than repeated lookups.
    pub fn log_users(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.num_logs());
        for s in &self.sessions {
            out.extend(std::iter::repeat_n(s.user, s.len as usize));
        }
        out
    }
}
