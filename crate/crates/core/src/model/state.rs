use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Corpus, CountTables, Hyperparameters, Variant};
use crate::error::{Error, Result};
use crate::ingest::SessionizedDataset;
use crate::numerics::{binary_probability, log_rising, normalize_log_weights, sample_binary, sample_log_weights};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepStats {
    /// 1-based index of the sweep just completed.
    pub sweep: u64,
    pub log_joint: f64,
    pub elapsed: Duration,
}

/// A Gibbs chain: data, hyperparameters, assignments, counts and RNG.
///
/// Count tables match a full recount of the assignments whenever control
/// returns from a public method.
#[derive(Debug, Clone)]
pub struct ModelState {
    corpus: Corpus,
    hp: Hyperparameters,
    /// Topic per session.
    z: Vec<u32>,
    /// Addiction flag per log.
    x: Vec<u8>,
    counts: CountTables,
    rng: ChaCha8Rng,
    seed: u64,
    sweeps_done: u64,
    beta_sum: f64,
    gamma_sum: f64,
    weights: Vec<f64>,
    session_artists: Vec<(u32, u32)>,
}

impl ModelState {
    /// Random initial state: topics uniform over `0..K`, flags uniform over
    /// {0, 1} for SWA and fixed at 0 for the session model.
    pub fn init(dataset: &SessionizedDataset, hp: Hyperparameters, seed: u64) -> Result<Self> {
        let corpus = Corpus::from_dataset(dataset)?;
        Self::init_corpus(corpus, hp, seed)
    }

    pub fn init_corpus(corpus: Corpus, hp: Hyperparameters, seed: u64) -> Result<Self> {
        hp.validate()?;
        if corpus.num_logs() == 0 {
            return Err(Error::Empty("dataset has no logs".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut z = Vec::with_capacity(corpus.num_sessions());
        let mut x = vec![0u8; corpus.num_logs()];
        for span in &corpus.sessions {
            z.push(rng.random_range(0..hp.topics as u32));
            if hp.variant == Variant::Swa {
                for i in span.logs() {
                    x[i] = rng.random_range(0..2u8);
                }
            }
        }
        Self::from_parts(corpus, hp, z, x, rng, seed, 0)
    }

    /// Reassembles a state from stored assignments; counts are recomputed.
    pub fn from_parts(
        corpus: Corpus,
        hp: Hyperparameters,
        z: Vec<u32>,
        x: Vec<u8>,
        rng: ChaCha8Rng,
        seed: u64,
        sweeps_done: u64,
    ) -> Result<Self> {
        hp.validate()?;
        if z.len() != corpus.num_sessions() || x.len() != corpus.num_logs() {
            return Err(Error::Contract("assignment lengths do not match the corpus".into()));
        }
        if z.iter().any(|&k| k as usize >= hp.topics) {
            return Err(Error::Contract("topic assignment out of range".into()));
        }
        match hp.variant {
            Variant::Session if x.iter().any(|&f| f != 0) => {
                return Err(Error::Contract("session model requires every flag to be 0".into()))
            }
            _ if x.iter().any(|&f| f > 1) => return Err(Error::Contract("flags must be 0 or 1".into())),
            _ => {}
        }
        let counts = CountTables::recount(&corpus, hp.topics, &z, &x);
        let artists = corpus.num_artists() as f64;
        Ok(ModelState {
            beta_sum: hp.beta * artists,
            gamma_sum: hp.gamma * artists,
            corpus,
            hp,
            z,
            x,
            counts,
            rng,
            seed,
            sweeps_done,
            weights: Vec::new(),
            session_artists: Vec::new(),
        })
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn hyperparameters(&self) -> &Hyperparameters {
        &self.hp
    }

    pub fn counts(&self) -> &CountTables {
        &self.counts
    }

    pub fn topics_assigned(&self) -> &[u32] {
        &self.z
    }

    pub fn flags(&self) -> &[u8] {
        &self.x
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sweeps_done(&self) -> u64 {
        self.sweeps_done
    }

    pub fn rng(&self) -> &ChaCha8Rng {
        &self.rng
    }

    pub fn recount(&self) -> CountTables {
        CountTables::recount(&self.corpus, self.hp.topics, &self.z, &self.x)
    }

    pub fn is_consistent(&self) -> bool {
        self.counts == self.recount() && self.counts.check_identities()
    }

    fn session(&self, user: usize, ordinal: usize) -> Result<usize> {
        self.corpus.session_index(user, ordinal).ok_or_else(|| Error::Lookup {
            kind: "session",
            id: format!("user {user} session {ordinal}"),
        })
    }

    fn log(&self, user: usize, ordinal: usize, position: usize) -> Result<usize> {
        self.corpus
            .log_index(user, ordinal, position)
            .ok_or_else(|| Error::Lookup {
                kind: "log",
                id: format!("user {user} session {ordinal} position {position}"),
            })
    }

    fn require_swa(&self) -> Result<()> {
        match self.hp.variant {
            Variant::Swa => Ok(()),
            Variant::Session => Err(Error::Contract(
                "addiction flags do not exist under the session model".into(),
            )),
        }
    }

    // ---- joint probability -------------------------------------------------

    /// Log of the collapsed joint P(D, Z, X | alpha, beta, gamma, rho).
    ///
    /// For the session model only the user-topic and topic-artist factors
    /// are included, which is the collapsed joint of that model.
    pub fn joint_log_prob(&self) -> f64 {
        let c = &self.counts;
        let hp = &self.hp;
        let k_count = hp.topics;
        let alpha_sum = hp.alpha * k_count as f64;
        let mut lp = 0.0;

        for u in 0..self.corpus.num_users() {
            for k in 0..k_count {
                lp += log_rising(hp.alpha, c.r_uk(u, k) as u64);
            }
            lp -= log_rising(alpha_sum, c.user_sessions[u] as u64);
        }
        for k in 0..k_count {
            let row = &c.topic_artist[k * c.artists..(k + 1) * c.artists];
            for &n in row {
                if n > 0 {
                    lp += log_rising(hp.beta, n as u64);
                }
            }
            lp -= log_rising(self.beta_sum, c.topic_logs[k] as u64);
        }
        if hp.variant == Variant::Swa {
            for u in 0..self.corpus.num_users() {
                for (_, n) in c.user_artist_addiction[u].iter() {
                    lp += log_rising(hp.gamma, n as u64);
                }
                lp -= log_rising(self.gamma_sum, c.user_addiction[u] as u64);
                lp += log_rising(hp.rho, c.user_taste[u] as u64) + log_rising(hp.rho, c.user_addiction[u] as u64)
                    - log_rising(2.0 * hp.rho, c.user_logs[u] as u64);
            }
        }
        lp
    }

    // ---- count maintenance -------------------------------------------------

    pub(crate) fn remove_session(&mut self, s: usize) {
        let span = self.corpus.sessions[s];
        let (u, k) = (span.user as usize, self.z[s] as usize);
        let c = &mut self.counts;
        c.user_topic[u * c.topics + k] -= 1;
        c.user_sessions[u] -= 1;
        for i in span.logs() {
            if self.x[i] == 0 {
                c.topic_artist[k * c.artists + self.corpus.log_artist[i] as usize] -= 1;
                c.topic_logs[k] -= 1;
            }
        }
    }

    pub(crate) fn add_session(&mut self, s: usize, k: u32) {
        let span = self.corpus.sessions[s];
        self.z[s] = k;
        let (u, k) = (span.user as usize, k as usize);
        let c = &mut self.counts;
        c.user_topic[u * c.topics + k] += 1;
        c.user_sessions[u] += 1;
        for i in span.logs() {
            if self.x[i] == 0 {
                c.topic_artist[k * c.artists + self.corpus.log_artist[i] as usize] += 1;
                c.topic_logs[k] += 1;
            }
        }
    }

    /// Removes log `i` from the flag-dependent tables. N_u is left alone.
    pub(crate) fn remove_log(&mut self, i: usize, s: usize) {
        let u = self.corpus.sessions[s].user as usize;
        let a = self.corpus.log_artist[i];
        let c = &mut self.counts;
        if self.x[i] == 0 {
            let k = self.z[s] as usize;
            c.user_taste[u] -= 1;
            c.topic_artist[k * c.artists + a as usize] -= 1;
            c.topic_logs[k] -= 1;
        } else {
            c.user_addiction[u] -= 1;
            c.user_artist_addiction[u].decrement(a);
        }
    }

    pub(crate) fn add_log(&mut self, i: usize, s: usize, flag: u8) {
        self.x[i] = flag;
        let u = self.corpus.sessions[s].user as usize;
        let a = self.corpus.log_artist[i];
        let c = &mut self.counts;
        if flag == 0 {
            let k = self.z[s] as usize;
            c.user_taste[u] += 1;
            c.topic_artist[k * c.artists + a as usize] += 1;
            c.topic_logs[k] += 1;
        } else {
            c.user_addiction[u] += 1;
            c.user_artist_addiction[u].increment(a);
        }
    }

    /// Moves session `s` (global index) to topic `k`.
    pub fn reassign_topic(&mut self, s: usize, k: u32) -> Result<()> {
        if s >= self.z.len() || k as usize >= self.hp.topics {
            return Err(Error::Contract(format!("cannot assign session {s} to topic {k}")));
        }
        self.remove_session(s);
        self.add_session(s, k);
        Ok(())
    }

    /// Sets the flag of log `i` (global index).
    pub fn reassign_flag(&mut self, i: usize, flag: u8) -> Result<()> {
        self.require_swa()?;
        if i >= self.x.len() || flag > 1 {
            return Err(Error::Contract(format!("cannot set flag {flag} on log {i}")));
        }
        let s = self.corpus.session_of_log(i);
        self.remove_log(i, s);
        self.add_log(i, s, flag);
        Ok(())
    }

    /// Overwrites every flag with `flag` and rebuilds the counts.
    pub fn clamp_flags(&mut self, flag: u8) -> Result<()> {
        if flag > 1 || (flag == 1 && self.hp.variant == Variant::Session) {
            return Err(Error::Contract(format!("cannot clamp flags to {flag}")));
        }
        self.x.iter_mut().for_each(|f| *f = flag);
        self.counts = self.recount();
        Ok(())
    }

    // ---- conditionals ------------------------------------------------------

    /// Distinct x = 0 artists of session `s` with multiplicities, and their
    /// total.
    fn gather_taste_artists(&self, s: usize, out: &mut Vec<(u32, u32)>) -> u32 {
        out.clear();
        let span = self.corpus.sessions[s];
        for i in span.logs() {
            if self.x[i] == 0 {
                out.push((self.corpus.log_artist[i], 1));
            }
        }
        let total = out.len() as u32;
        out.sort_unstable_by_key(|e| e.0);
        out.dedup_by(|next, kept| {
            if next.0 == kept.0 {
                kept.1 += next.1;
                true
            } else {
                false
            }
        });
        total
    }

    /// Unnormalized log weights of the topic conditional for session `s`.
    /// `included` says whether the session is currently in the counts; if
    /// so its contribution is subtracted on the fly.
    fn topic_log_weights(&self, s: usize, included: bool, artists: &[(u32, u32)], n_taste: u32, out: &mut Vec<f64>) {
        let c = &self.counts;
        let hp = &self.hp;
        let u = self.corpus.sessions[s].user as usize;
        let current = self.z[s] as usize;
        out.clear();
        for k in 0..hp.topics {
            let own = included && k == current;
            let r = c.r_uk(u, k) - own as u32;
            let n_k = c.topic_logs[k] - if own { n_taste } else { 0 };
            let mut w = (r as f64 + hp.alpha).ln() - log_rising(n_k as f64 + self.beta_sum, n_taste as u64);
            let row = &c.topic_artist[k * c.artists..(k + 1) * c.artists];
            for &(a, n) in artists {
                let n_ka = row[a as usize] - if own { n } else { 0 };
                w += log_rising(n_ka as f64 + hp.beta, n as u64);
            }
            out.push(w);
        }
    }

    /// Unnormalized log weights (x = 0, x = 1) for log `i` in session `s`.
    fn flag_log_weights(&self, i: usize, s: usize, included: bool) -> (f64, f64) {
        let c = &self.counts;
        let hp = &self.hp;
        let u = self.corpus.sessions[s].user as usize;
        let a = self.corpus.log_artist[i];
        let k = self.z[s] as usize;
        let (own0, own1) = match (included, self.x[i]) {
            (false, _) => (0, 0),
            (true, 0) => (1, 0),
            (true, _) => (0, 1),
        };
        let n_u0 = c.user_taste[u] - own0;
        let n_u1 = c.user_addiction[u] - own1;
        let n_ka = c.n_ka(k, a as usize) - own0;
        let n_k = c.topic_logs[k] - own0;
        let n_u1a = c.user_artist_addiction[u].get(a) - own1;
        let w0 = (hp.rho + n_u0 as f64).ln() + (n_ka as f64 + hp.beta).ln() - (n_k as f64 + self.beta_sum).ln();
        let w1 = (hp.rho + n_u1 as f64).ln() + (n_u1a as f64 + hp.gamma).ln() - (n_u1 as f64 + self.gamma_sum).ln();
        (w0, w1)
    }

    /// Conditional distribution of the topic of session `r` of user `u`
    /// given everything else.
    pub fn topic_distribution(&self, user: usize, ordinal: usize) -> Result<Vec<f64>> {
        let s = self.session(user, ordinal)?;
        Ok(self.topic_distribution_at(s))
    }

    pub fn topic_distribution_at(&self, s: usize) -> Vec<f64> {
        let mut artists = Vec::new();
        let n_taste = self.gather_taste_artists(s, &mut artists);
        let mut w = Vec::with_capacity(self.hp.topics);
        self.topic_log_weights(s, true, &artists, n_taste, &mut w);
        normalize_log_weights(&mut w);
        w
    }

    /// Conditional (P(x=0), P(x=1)) of one log given everything else.
    pub fn flag_distribution(&self, user: usize, ordinal: usize, position: usize) -> Result<[f64; 2]> {
        self.require_swa()?;
        let i = self.log(user, ordinal, position)?;
        let s = self.corpus.session_index(user, ordinal).expect("checked above");
        Ok(self.flag_distribution_in(i, s))
    }

    pub(crate) fn flag_distribution_in(&self, i: usize, s: usize) -> [f64; 2] {
        let (w0, w1) = self.flag_log_weights(i, s, true);
        let p1 = binary_probability(w0, w1);
        [1.0 - p1, p1]
    }

    /// Leave-one-out (P(x=0), P(x=1)) for every log, in corpus order.
    pub fn flag_posteriors(&self) -> Result<Vec<[f64; 2]>> {
        self.require_swa()?;
        let mut out = Vec::with_capacity(self.x.len());
        for (s, span) in self.corpus.sessions.iter().enumerate() {
            for i in span.logs() {
                out.push(self.flag_distribution_in(i, s));
            }
        }
        Ok(out)
    }

    // ---- sampling ----------------------------------------------------------

    fn resample_topic(&mut self, s: usize) -> u32 {
        let mut artists = std::mem::take(&mut self.session_artists);
        let mut weights = std::mem::take(&mut self.weights);
        let n_taste = self.gather_taste_artists(s, &mut artists);
        self.remove_session(s);
        self.topic_log_weights(s, false, &artists, n_taste, &mut weights);
        let k = sample_log_weights(&mut weights, &mut self.rng) as u32;
        self.add_session(s, k);
        self.session_artists = artists;
        self.weights = weights;
        k
    }

    fn resample_flag(&mut self, i: usize, s: usize) -> u8 {
        self.remove_log(i, s);
        let (w0, w1) = self.flag_log_weights(i, s, false);
        let flag = sample_binary(w0, w1, &mut self.rng);
        self.add_log(i, s, flag);
        flag
    }

    /// Resamples the topic of session `r` of user `u`.
    pub fn sample_topic(&mut self, user: usize, ordinal: usize) -> Result<usize> {
        let s = self.session(user, ordinal)?;
        Ok(self.resample_topic(s) as usize)
    }

    /// Resamples the flag of log `j` of session `r` of user `u`.
    pub fn sample_x(&mut self, user: usize, ordinal: usize, position: usize) -> Result<u8> {
        self.require_swa()?;
        let i = self.log(user, ordinal, position)?;
        let s = self.corpus.session_index(user, ordinal).expect("checked above");
        Ok(self.resample_flag(i, s))
    }

    /// One full scan: users in index order, sessions chronologically, the
    /// session topic first and then each flag in position order.
    pub fn gibbs_sweep(&mut self) -> SweepStats {
        let started = Instant::now();
        let swa = self.hp.variant == Variant::Swa;
        for s in 0..self.corpus.num_sessions() {
            self.resample_topic(s);
            if swa {
                for i in self.corpus.sessions[s].logs() {
                    self.resample_flag(i, s);
                }
            }
        }
        self.sweeps_done += 1;
        SweepStats {
            sweep: self.sweeps_done,
            log_joint: self.joint_log_prob(),
            elapsed: started.elapsed(),
        }
    }
}
