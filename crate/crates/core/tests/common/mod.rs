#![allow(dead_code)]

use chrono::{DateTime, TimeZone, Utc};
use rand::Rng;
use swa_core::ingest::{segment_sessions, PlayLog, SessionGap, SessionizedDataset, UserSessions};
use swa_core::model::{Hyperparameters, Variant};

pub fn at(secs: i64) -> DateTime<Utc> {
    Utc.timestamp_opt(1_360_000_000 + secs, 0).unwrap()
}

/// Random dataset with at most `max_users` users, `max_artists` artists and
/// `max_logs` logs; sessions are split by 1 minute / 2 hour gaps.
pub fn tiny_dataset<R: Rng>(rng: &mut R, max_users: usize, max_artists: usize, max_logs: usize) -> SessionizedDataset {
    let n_logs = rng.random_range(1..=max_logs);
    let n_users = rng.random_range(1..=max_users);
    let n_artists = rng.random_range(1..=max_artists);
    let mut clock = vec![0i64; n_users];
    let mut logs = Vec::new();
    for _ in 0..n_logs {
        let u = rng.random_range(0..n_users);
        clock[u] += if rng.random_bool(0.5) { 60 } else { 7200 };
        let a = rng.random_range(0..n_artists);
        logs.push(PlayLog::new(format!("u{u}"), format!("a{a}"), at(clock[u])));
    }
    segment_sessions(&logs, SessionGap::default())
}

/// Collapsed joint p(z, x, artists) as a product of Polya-urn predictive
/// probabilities, in linear space. Independent of the library's log-gamma
/// formulation; only usable on tiny instances.
pub fn urn_joint(ds: &SessionizedDataset, hp: &Hyperparameters, z: &[u32], x: &[u8]) -> f64 {
    let k_n = hp.topics;
    let a_n = ds.artists.len();
    let a_f = a_n as f64;
    let swa = hp.variant == Variant::Swa;
    let mut n_ka = vec![vec![0usize; a_n]; k_n];
    let mut n_k = vec![0usize; k_n];
    let mut p = 1.0;
    let (mut s, mut i) = (0, 0);
    for user in &ds.users {
        let mut r_uk = vec![0usize; k_n];
        let mut n_u = [0usize; 2];
        let mut n_ua = vec![0usize; a_n];
        for (r, session) in user.sessions.iter().enumerate() {
            let k = z[s] as usize;
            p *= (r_uk[k] as f64 + hp.alpha) / (r as f64 + hp.alpha * k_n as f64);
            r_uk[k] += 1;
            for log in &session.logs {
                let a = ds.artist_index(&log.artist_id).unwrap();
                let f = x[i] as usize;
                if swa {
                    p *= (n_u[f] as f64 + hp.rho) / ((n_u[0] + n_u[1]) as f64 + 2.0 * hp.rho);
                }
                if f == 0 {
                    p *= (n_ka[k][a] as f64 + hp.beta) / (n_k[k] as f64 + hp.beta * a_f);
                    n_ka[k][a] += 1;
                    n_k[k] += 1;
                } else {
                    p *= (n_ua[a] as f64 + hp.gamma) / (n_u[1] as f64 + hp.gamma * a_f);
                    n_ua[a] += 1;
                }
                n_u[f] += 1;
                i += 1;
            }
            s += 1;
        }
    }
    p
}

pub fn normalized(w: &[f64]) -> Vec<f64> {
    let t: f64 = w.iter().sum();
    w.iter().map(|v| v / t).collect()
}

/// Keeps the first `sessions.len() - n_test` sessions of each user for
/// training and the rest for testing.
pub fn split_last_sessions(ds: &SessionizedDataset, n_test: usize) -> (SessionizedDataset, SessionizedDataset) {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for u in &ds.users {
        let cut = u.sessions.len().saturating_sub(n_test);
        train.push(UserSessions {
            user_id: u.user_id.clone(),
            sessions: u.sessions[..cut].to_vec(),
        });
        test.push(UserSessions {
            user_id: u.user_id.clone(),
            sessions: u.sessions[cut..].to_vec(),
        });
    }
    (
        SessionizedDataset::from_users(train),
        SessionizedDataset::from_users(test),
    )
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &t in &idx[i..=j] {
            r[t] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = ra.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}
