use serde::{Deserialize, Serialize};

use super::Corpus;

/// Sorted `(key, count)` pairs with no zero entries.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparseCounts(Vec<(u32, u32)>);

impl SparseCounts {
    #[inline]
    pub fn get(&self, key: u32) -> u32 {
        match self.0.binary_search_by_key(&key, |e| e.0) {
            Ok(i) => self.0[i].1,
            Err(_) => 0,
        }
    }

    #[inline]
    pub fn increment(&mut self, key: u32) {
        match self.0.binary_search_by_key(&key, |e| e.0) {
            Ok(i) => self.0[i].1 += 1,
            Err(i) => self.0.insert(i, (key, 1)),
        }
    }

    #[inline]
    pub fn decrement(&mut self, key: u32) {
        let i = self
            .0
            .binary_search_by_key(&key, |e| e.0)
            .expect("decrement of a zero count");
        self.0[i].1 -= 1;
        if self.0[i].1 == 0 {
            self.0.remove(i);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.0.iter().copied()
    }

    pub fn nnz(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|e| e.1 as u64).sum()
    }
}

/// Sufficient statistics of the collapsed model.
///
/// Dense tables are row-major: `topic_artist[k * A + a]`,
/// `user_topic[u * K + k]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountTables {
    pub topics: usize,
    pub artists: usize,
    /// N_u0: logs of each user with x = 0.
    pub user_taste: Vec<u32>,
    /// N_u1: logs of each user with x = 1.
    pub user_addiction: Vec<u32>,
    /// N_u: all logs of each user.
    pub user_logs: Vec<u32>,
    /// N_u1a.
    pub user_artist_addiction: Vec<SparseCounts>,
    /// N_ka: x = 0 logs of artist a in sessions assigned topic k.
    pub topic_artist: Vec<u32>,
    /// N_k.
    pub topic_logs: Vec<u32>,
    /// R_uk.
    pub user_topic: Vec<u32>,
    /// R_u.
    pub user_sessions: Vec<u32>,
}

impl CountTables {
    pub fn zeros(topics: usize, users: usize, artists: usize) -> Self {
        CountTables {
            topics,
            artists,
            user_taste: vec![0; users],
            user_addiction: vec![0; users],
            user_logs: vec![0; users],
            user_artist_addiction: vec![SparseCounts::default(); users],
            topic_artist: vec![0; topics * artists],
            topic_logs: vec![0; topics],
            user_topic: vec![0; users * topics],
            user_sessions: vec![0; users],
        }
    }

    /// Rebuilds every table from scratch given the assignments.
    pub fn recount(corpus: &Corpus, topics: usize, z: &[u32], x: &[u8]) -> Self {
        let n_artists = corpus.num_artists();
        let mut c = CountTables::zeros(topics, corpus.num_users(), n_artists);
        for (s, span) in corpus.sessions.iter().enumerate() {
            let u = span.user as usize;
            let k = z[s] as usize;
            c.user_topic[u * topics + k] += 1;
            c.user_sessions[u] += 1;
            for i in span.logs() {
                let a = corpus.log_artist[i];
                c.user_logs[u] += 1;
                if x[i] == 0 {
                    c.user_taste[u] += 1;
                    c.topic_artist[k * n_artists + a as usize] += 1;
                    c.topic_logs[k] += 1;
                } else {
                    c.user_addiction[u] += 1;
                    c.user_artist_addiction[u].increment(a);
                }
            }
        }
        c
    }

    #[inline]
    pub fn n_ka(&self, k: usize, a: usize) -> u32 {
        self.topic_artist[k * self.artists + a]
    }

    #[inline]
    pub fn r_uk(&self, u: usize, k: usize) -> u32 {
        self.user_topic[u * self.topics + k]
    }

    /// Checks the additive identities between the tables.
    pub fn check_identities(&self) -> bool {
        let users = self.user_logs.len();
        (0..users).all(|u| {
            self.user_taste[u] + self.user_addiction[u] == self.user_logs[u]
                && self.user_artist_addiction[u].total() == self.user_addiction[u] as u64
                && (0..self.topics).map(|k| self.r_uk(u, k) as u64).sum::<u64>() == self.user_sessions[u] as u64
        }) && (0..self.topics)
            .all(|k| (0..self.artists).map(|a| self.n_ka(k, a) as u64).sum::<u64>() == self.topic_logs[k] as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_counts_drop_zeros() {
        let mut c = SparseCounts::default();
        c.increment(5);
        c.increment(2);
        c.increment(5);
        assert_eq!(c.iter().collect::<Vec<_>>(), vec![(2, 1), (5, 2)]);
        c.decrement(2);
        assert_eq!(c.get(2), 0);
        assert_eq!(c.nnz(), 1);
        assert_eq!(c.total(), 2);
    }

    #[test]
    #[should_panic(expected = "zero count")]
    fn sparse_underflow_panics() {
        SparseCounts::default().decrement(1);
    }
}
