//! Forward simulation of the SWA generative process with known parameters.
//!
//! For every user and session a topic is drawn from theta_u; every log then
//! flips x ~ Bernoulli(lambda_u1) and draws its artist from phi_z (x = 0) or
//! psi_u (x = 1). Setting every lambda_u1 to 0 yields session-model data.

use std::io::Write;

use chrono::{DateTime, SecondsFormat, TimeDelta, Timelike, Utc};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{PlayLog, Session, SessionGap, SessionizedDataset, UserSessions};

/// Session sizes: 1 + Geometric(1/mean), rejected above `max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionLength {
    pub mean: f64,
    pub max: usize,
}

impl SessionLength {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if self.mean <= 1.0 || self.max <= 1 {
            return 1;
        }
        let p = 1.0 / self.mean;
        loop {
            let mut n = 1;
            while rng.random::<f64>() >= p {
                n += 1;
                if n > self.max {
                    break;
                }
            }
            if n <= self.max {
                return n;
            }
        }
    }
}

/// Additive shift of logit(lambda_u1) per UTC hour of the log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HourSchedule {
    pub logit_shift: [f64; 24],
}

impl HourSchedule {
    /// Addiction-heavy early mornings (05-07) and taste-heavy late evenings
    /// (21-23).
    pub fn morning_high(strength: f64) -> Self {
        let mut logit_shift = [0.0; 24];
        for h in [5, 6, 7] {
            logit_shift[h] = strength;
        }
        for h in [21, 22, 23] {
            logit_shift[h] = -strength;
        }
        HourSchedule { logit_shift }
    }

    pub fn apply(&self, lambda1: f64, hour: u32) -> f64 {
        if lambda1 <= 0.0 || lambda1 >= 1.0 {
            return lambda1;
        }
        let logit = (lambda1 / (1.0 - lambda1)).ln() + self.logit_shift[hour as usize % 24];
        1.0 / (1.0 + (-logit).exp())
    }
}

/// Spacing of synthesized timestamps, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub start: DateTime<Utc>,
    /// Inclusive range of gaps between consecutive logs of one session.
    pub intra_gap: (i64, i64),
    /// Inclusive range of gaps between the end of one session and the start
    /// of the next.
    pub inter_gap: (i64, i64),
    pub session_gap: SessionGap,
}

impl Default for Timing {
    fn default() -> Self {
        Timing {
            start: DateTime::parse_from_rfc3339("2013-01-01T00:00:00Z")
                .expect("valid constant")
                .with_timezone(&Utc),
            intra_gap: (120, 600),
            inter_gap: (1800, 20 * 3600),
            session_gap: SessionGap::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Per user, distribution over topics.
    pub theta: Vec<Vec<f64>>,
    /// Per topic, distribution over artists.
    pub phi: Vec<Vec<f64>>,
    /// Per user, addiction distribution over artists.
    pub psi: Vec<Vec<f64>>,
    /// Per user, probability of addiction mode.
    pub lambda1: Vec<f64>,
    pub sessions_per_user: Vec<usize>,
    pub session_length: SessionLength,
    pub hour_schedule: Option<HourSchedule>,
    pub timing: Timing,
}

impl GroundTruth {
    pub fn num_users(&self) -> usize {
        self.theta.len()
    }

    pub fn num_artists(&self) -> usize {
        self.phi.first().map_or(0, Vec::len)
    }

    pub fn num_topics(&self) -> usize {
        self.phi.len()
    }

    pub fn validate(&self) -> Result<()> {
        let (n_users, n_artists, k) = (self.num_users(), self.num_artists(), self.num_topics());
        let normalized = |row: &Vec<f64>, len: usize| {
            row.len() == len && row.iter().all(|&p| p >= 0.0) && (row.iter().sum::<f64>() - 1.0).abs() < 1e-12
        };
        if n_users == 0 || n_artists == 0 || k == 0 {
            return Err(Error::config("truth", "need at least one user, artist and topic"));
        }
        if !self.theta.iter().all(|r| normalized(r, k)) {
            return Err(Error::config("truth", "theta rows must be normalized over K topics"));
        }
        if !self.phi.iter().all(|r| normalized(r, n_artists)) {
            return Err(Error::config("truth", "phi rows must be normalized"));
        }
        if self.psi.len() != n_users || !self.psi.iter().all(|r| normalized(r, n_artists)) {
            return Err(Error::config("truth", "psi rows must be normalized"));
        }
        if self.lambda1.len() != n_users || !self.lambda1.iter().all(|l| (0.0..=1.0).contains(l)) {
            return Err(Error::config("truth", "lambda must lie in [0, 1]"));
        }
        if self.sessions_per_user.len() != n_users {
            return Err(Error::config("truth", "sessions_per_user length"));
        }
        let gap = self.timing.session_gap.seconds();
        let (lo, hi) = self.timing.intra_gap;
        if lo < 0 || hi < lo || hi >= gap {
            return Err(Error::config(
                "truth",
                "intra-session gaps must lie below the session gap",
            ));
        }
        let (lo, hi) = self.timing.inter_gap;
        if lo < gap || hi < lo {
            return Err(Error::config("truth", "inter-session gaps must reach the session gap"));
        }
        Ok(())
    }

    /// The true predictive mixture over artists for user `u` (without hour
    /// modulation).
    pub fn mixture(&self, u: usize) -> Vec<f64> {
        let l1 = self.lambda1[u];
        (0..self.num_artists())
            .map(|a| {
                let topic: f64 = (0..self.num_topics()).map(|k| self.theta[u][k] * self.phi[k][a]).sum();
                (1.0 - l1) * topic + l1 * self.psi[u][a]
            })
            .collect()
    }

    pub fn user_id(&self, u: usize) -> String {
        format!("u{:0width$}", u, width = digits(self.num_users()))
    }

    pub fn artist_id(&self, a: usize) -> String {
        format!("a{:0width$}", a, width = digits(self.num_artists()))
    }
}

fn digits(n: usize) -> usize {
    n.saturating_sub(1).max(1).to_string().len()
}

/// How per-user lambda_u1 values are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LambdaPrior {
    Beta {
        a: f64,
        b: f64,
    },
    Fixed(f64),
    /// User u gets `values[u % len]`.
    Groups(Vec<f64>),
}

/// Recipe for a random ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub users: usize,
    pub artists: usize,
    pub topics: usize,
    pub sessions_per_user: usize,
    pub session_length: SessionLength,
    /// Dirichlet concentration of theta rows.
    pub theta_concentration: f64,
    /// Dirichlet concentration of phi rows.
    pub phi_concentration: f64,
    /// Dirichlet concentration of psi rows.
    pub psi_concentration: f64,
    pub lambda: LambdaPrior,
    pub hour_schedule: Option<HourSchedule>,
    pub timing: Timing,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            users: 200,
            artists: 300,
            topics: 10,
            sessions_per_user: 20,
            session_length: SessionLength { mean: 6.0, max: 30 },
            theta_concentration: 0.1,
            phi_concentration: 0.05,
            psi_concentration: 0.05,
            lambda: LambdaPrior::Beta { a: 0.5, b: 0.5 },
            hour_schedule: None,
            timing: Timing::default(),
        }
    }
}

/// Draws from a symmetric Dirichlet via log-space Gamma variates, which
/// stays well defined for very small concentrations.
pub fn sample_dirichlet<R: Rng + ?Sized>(concentration: f64, dim: usize, rng: &mut R) -> Vec<f64> {
    let shape_plus_one = Gamma::new(concentration + 1.0, 1.0).expect("positive shape");
    let logs: Vec<f64> = (0..dim)
        .map(|_| {
            // Gamma(a) = Gamma(a + 1) * U^(1/a)
            let g: f64 = shape_plus_one.sample(rng);
            let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
            g.ln() + u.ln() / concentration
        })
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    p
}

impl SynthConfig {
    pub fn sample_truth(&self, seed: u64) -> Result<GroundTruth> {
        if self.users == 0 || self.artists == 0 || self.topics == 0 || self.sessions_per_user == 0 {
            return Err(Error::config(
                "synth",
                "users, artists, topics and sessions must be positive",
            ));
        }
        for (field, v) in [
            ("theta_concentration", self.theta_concentration),
            ("phi_concentration", self.phi_concentration),
            ("psi_concentration", self.psi_concentration),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(field, "must be positive"));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = (0..self.topics)
            .map(|_| sample_dirichlet(self.phi_concentration, self.artists, &mut rng))
            .collect();
        let mut theta = Vec::with_capacity(self.users);
        let mut psi = Vec::with_capacity(self.users);
        let mut lambda1 = Vec::with_capacity(self.users);
        for u in 0..self.users {
            theta.push(sample_dirichlet(self.theta_concentration, self.topics, &mut rng));
            psi.push(sample_dirichlet(self.psi_concentration, self.artists, &mut rng));
            lambda1.push(match &self.lambda {
                LambdaPrior::Beta { a, b } => Beta::new(*a, *b)
                    .map_err(|e| Error::config("lambda", e.to_string()))?
                    .sample(&mut rng),
                LambdaPrior::Fixed(v) => *v,
                LambdaPrior::Groups(values) if !values.is_empty() => values[u % values.len()],
                LambdaPrior::Groups(_) => return Err(Error::config("lambda", "empty group list")),
            });
        }
        let truth = GroundTruth {
            theta,
            phi,
            psi,
            lambda1,
            sessions_per_user: vec![self.sessions_per_user; self.users],
            session_length: self.session_length,
            hour_schedule: self.hour_schedule,
            timing: self.timing,
        };
        truth.validate()?;
        Ok(truth)
    }
}

/// Generated logs with the latent variables that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    /// All logs, user-major and chronological.
    pub logs: Vec<PlayLog>,
    pub dataset: SessionizedDataset,
    /// Per user, per session.
    pub true_topics: Vec<Vec<usize>>,
    /// Per user, per session, per log.
    pub true_flags: Vec<Vec<Vec<u8>>>,
}

struct UserDraw {
    sessions: Vec<Session>,
    topics: Vec<usize>,
    flags: Vec<Vec<u8>>,
}

/// Runs the generative process forward. Each user gets its own RNG stream
/// derived from `seed`, so output does not depend on thread scheduling.
pub fn generate_dataset(truth: &GroundTruth, seed: u64) -> Result<SynthData> {
    truth.validate()?;
    let phi_dists = truth
        .phi
        .iter()
        .map(|row| WeightedIndex::new(row).map_err(|e| Error::config("truth", e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let artist_ids: Vec<String> = (0..truth.num_artists()).map(|a| truth.artist_id(a)).collect();

    let draws: Vec<UserDraw> = (0..truth.num_users())
        .into_par_iter()
        .map(|u| -> Result<UserDraw> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(u as u64 + 1);
            let user_id = truth.user_id(u);
            let theta = WeightedIndex::new(&truth.theta[u]).map_err(|e| Error::config("truth", e.to_string()))?;
            let psi = WeightedIndex::new(&truth.psi[u]).map_err(|e| Error::config("truth", e.to_string()))?;
            let timing = &truth.timing;
            let mut cursor = timing.start + TimeDelta::seconds(rng.random_range(0..86_400));
            let mut out = UserDraw {
                sessions: Vec::new(),
                topics: Vec::new(),
                flags: Vec::new(),
            };
            for r in 0..truth.sessions_per_user[u] {
                if r > 0 {
                    cursor += TimeDelta::seconds(rng.random_range(timing.inter_gap.0..=timing.inter_gap.1));
                }
                let z = theta.sample(&mut rng);
                let len = truth.session_length.sample(&mut rng);
                let mut logs = Vec::with_capacity(len);
                let mut flags = Vec::with_capacity(len);
                for j in 0..len {
                    if j > 0 {
                        cursor += TimeDelta::seconds(rng.random_range(timing.intra_gap.0..=timing.intra_gap.1));
                    }
                    let lambda = match &truth.hour_schedule {
                        Some(s) => s.apply(truth.lambda1[u], cursor.hour()),
                        None => truth.lambda1[u],
                    };
                    let x = u8::from(rng.random::<f64>() < lambda);
                    let a = if x == 0 {
                        phi_dists[z].sample(&mut rng)
                    } else {
                        psi.sample(&mut rng)
                    };
                    logs.push(PlayLog::new(user_id.clone(), artist_ids[a].clone(), cursor));
                    flags.push(x);
                }
                out.sessions.push(Session {
                    user_id: user_id.clone(),
                    logs,
                });
                out.topics.push(z);
                out.flags.push(flags);
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut logs = Vec::new();
    let mut users = Vec::with_capacity(draws.len());
    let mut true_topics = Vec::with_capacity(draws.len());
    let mut true_flags = Vec::with_capacity(draws.len());
    for (u, d) in draws.into_iter().enumerate() {
        logs.extend(d.sessions.iter().flat_map(|s| s.logs.iter().cloned()));
        users.push(UserSessions {
            user_id: truth.user_id(u),
            sessions: d.sessions,
        });
        true_topics.push(d.topics);
        true_flags.push(d.flags);
    }
    Ok(SynthData {
        logs,
        dataset: SessionizedDataset::from_users(users),
        true_topics,
        true_flags,
    })
}

/// Writes logs in the Last.fm 1K-users layout read by the ingest module.
pub fn write_lastfm_logs<W: Write>(mut w: W, logs: &[PlayLog]) -> Result<()> {
    for log in logs {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t\t{}-track",
            log.user_id,
            log.timestamp.to_rfc3339_opts(SecondsFormat::Secs, true),
            log.artist_id,
            log.artist_id,
            log.artist_id
        )?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct TruthFile<'a> {
    provenance: serde_json::Value,
    truth: &'a GroundTruth,
    users: Vec<String>,
    artists: Vec<String>,
    topics: &'a [Vec<usize>],
    flags: &'a [Vec<Vec<u8>>],
}

/// Sidecar with parameters and latent assignments. `provenance` must be JSON.
pub fn write_truth<W: Write>(mut w: W, truth: &GroundTruth, data: &SynthData, provenance: &str) -> Result<()> {
    let file = TruthFile {
        provenance: serde_json::from_str(provenance)?,
        truth,
        users: (0..truth.num_users()).map(|u| truth.user_id(u)).collect(),
        artists: (0..truth.num_artists()).map(|a| truth.artist_id(a)).collect(),
        topics: &data.true_topics,
        flags: &data.true_flags,
    };
    serde_json::to_writer(&mut w, &file)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Small fixed dataset for unit tests.
#[cfg(test)]
pub(crate) fn tiny_fixture() -> SessionizedDataset {
    let config = SynthConfig {
        users: 4,
        artists: 6,
        topics: 2,
        sessions_per_user: 3,
        session_length: SessionLength { mean: 3.0, max: 5 },
        ..SynthConfig::default()
    };
    let truth = config.sample_truth(5).unwrap();
    generate_dataset(&truth, 6).unwrap().dataset
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::segment_sessions;

    fn small_config() -> SynthConfig {
        SynthConfig {
            users: 12,
            artists: 20,
            topics: 3,
            sessions_per_user: 8,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn zero_lambda_gives_taste_only_data() {
        let config = SynthConfig {
            lambda: LambdaPrior::Fixed(0.0),
            ..small_config()
        };
        let truth = config.sample_truth(1).unwrap();
        let data = generate_dataset(&truth, 2).unwrap();
        assert!(data.true_flags.iter().flatten().flatten().all(|&x| x == 0));
    }

    #[test]
    fn concentrated_addiction_plays_one_artist() {
        let mut truth = small_config().sample_truth(1).unwrap();
        for u in 0..truth.num_users() {
            truth.psi[u] = vec![0.0; truth.num_artists()];
            let a = u % truth.num_artists();
            truth.psi[u][a] = 1.0;
            truth.lambda1[u] = 1.0;
        }
        let data = generate_dataset(&truth, 3).unwrap();
        for (u, user) in data.dataset.users.iter().enumerate() {
            let expected = truth.artist_id(u % truth.num_artists());
            assert!(user.logs().all(|l| l.artist_id == expected));
        }
    }

    #[test]
    fn resegmenting_reproduces_sessions() {
        let truth = small_config().sample_truth(4).unwrap();
        let data = generate_dataset(&truth, 5).unwrap();
        let again = segment_sessions(&data.logs, truth.timing.session_gap);
        assert_eq!(again, data.dataset);
    }

    #[test]
    fn same_seed_same_data() {
        let truth = small_config().sample_truth(4).unwrap();
        assert_eq!(
            generate_dataset(&truth, 9).unwrap(),
            generate_dataset(&truth, 9).unwrap()
        );
        assert_ne!(
            generate_dataset(&truth, 9).unwrap().logs,
            generate_dataset(&truth, 10).unwrap().logs
        );
    }

    #[test]
    fn dirichlet_rows_normalized_even_for_tiny_concentration() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for &c in &[1e-4, 0.05, 1.0, 50.0] {
            let p = sample_dirichlet(c, 100, &mut rng);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|v| v.is_finite() && *v >= 0.0));
        }
    }

    #[test]
    fn invalid_timing_rejected() {
        let mut truth = small_config().sample_truth(1).unwrap();
        truth.timing.intra_gap = (0, 1800);
        assert!(truth.validate().is_err());
    }

    #[test]
    fn schedule_shifts_log_odds() {
        let s = HourSchedule::morning_high(2.0);
        assert!(s.apply(0.5, 6) > 0.85);
        assert!(s.apply(0.5, 22) < 0.15);
        assert_eq!(s.apply(0.5, 12), 0.5);
        assert_eq!(s.apply(0.0, 6), 0.0);
    }

    #[test]
    fn lastfm_output_parses_back() {
        let truth = small_config().sample_truth(1).unwrap();
        let data = generate_dataset(&truth, 2).unwrap();
        let mut buf = Vec::new();
        write_lastfm_logs(&mut buf, &data.logs).unwrap();
        let parsed = crate::ingest::parse_play_logs(buf.as_slice(), &crate::ingest::FormatConfig::lastfm_1k()).unwrap();
        assert_eq!(parsed.logs, data.logs);
    }
}
