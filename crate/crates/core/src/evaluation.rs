//! Point estimates from a Gibbs state, the per-log predictive mixture, and
//! held-out perplexity.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::SessionizedDataset;
use crate::model::{Hyperparameters, ModelState, Variant};
use crate::numerics::pairwise_sum;
use crate::provenance;

/// Sparse user-artist addiction row: explicit values for artists the user
/// was ever addicted to, `floor` for every other artist.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothedRow {
    pub entries: Vec<(u32, f64)>,
    pub floor: f64,
}

impl SmoothedRow {
    #[inline]
    pub fn get(&self, a: u32) -> f64 {
        match self.entries.binary_search_by_key(&a, |e| e.0) {
            Ok(i) => self.entries[i].1,
            Err(_) => self.floor,
        }
    }

    pub fn sum(&self, len: usize) -> f64 {
        self.entries.iter().map(|e| e.1).sum::<f64>() + self.floor * (len - self.entries.len()) as f64
    }
}

/// theta, phi, psi and lambda read off a single Gibbs state.
#[derive(Debug, Clone, PartialEq)]
pub struct PointEstimates {
    pub hyperparameters: Hyperparameters,
    /// Sorted user ids.
    pub users: Vec<String>,
    /// Sorted artist ids.
    pub artists: Vec<String>,
    /// |U| x K, row-major.
    pub theta: Vec<f64>,
    /// K x |A|, row-major.
    pub phi: Vec<f64>,
    /// Value of phi_ka for artists with N_ka = 0.
    pub phi_floor: Vec<f64>,
    pub psi: Vec<SmoothedRow>,
    /// Per user (lambda_0, lambda_1).
    pub lambda: Vec<[f64; 2]>,
    /// N_u per user.
    pub user_logs: Vec<u64>,
}

/// Applies the closed-form point estimates to the state's counts.
///
/// Under the session model psi is uniform and lambda is (1, 0), so the
/// predictive mixture reduces to the topic part.
pub fn estimate_parameters(state: &ModelState) -> PointEstimates {
    let hp = *state.hyperparameters();
    let c = state.counts();
    let corpus = state.corpus();
    let (n_users, n_artists, k_count) = (corpus.num_users(), corpus.num_artists(), hp.topics);
    let a_f = n_artists as f64;

    let mut theta = Vec::with_capacity(n_users * k_count);
    for u in 0..n_users {
        let denom = c.user_sessions[u] as f64 + hp.alpha * k_count as f64;
        theta.extend((0..k_count).map(|k| (c.r_uk(u, k) as f64 + hp.alpha) / denom));
    }

    let mut phi = Vec::with_capacity(k_count * n_artists);
    let mut phi_floor = Vec::with_capacity(k_count);
    for k in 0..k_count {
        let denom = c.topic_logs[k] as f64 + hp.beta * a_f;
        phi_floor.push(hp.beta / denom);
        phi.extend((0..n_artists).map(|a| (c.n_ka(k, a) as f64 + hp.beta) / denom));
    }

    let (psi, lambda) = match hp.variant {
        Variant::Swa => {
            let psi = (0..n_users)
                .map(|u| {
                    let denom = c.user_addiction[u] as f64 + hp.gamma * a_f;
                    SmoothedRow {
                        entries: c.user_artist_addiction[u]
                            .iter()
                            .map(|(a, n)| (a, (n as f64 + hp.gamma) / denom))
                            .collect(),
                        floor: hp.gamma / denom,
                    }
                })
                .collect();
            let lambda = (0..n_users)
                .map(|u| {
                    let denom = c.user_logs[u] as f64 + 2.0 * hp.rho;
                    [
                        (c.user_taste[u] as f64 + hp.rho) / denom,
                        (c.user_addiction[u] as f64 + hp.rho) / denom,
                    ]
                })
                .collect();
            (psi, lambda)
        }
        Variant::Session => (
            vec![
                SmoothedRow {
                    entries: Vec::new(),
                    floor: 1.0 / a_f,
                };
                n_users
            ],
            vec![[1.0, 0.0]; n_users],
        ),
    };

    PointEstimates {
        hyperparameters: hp,
        users: corpus.users.clone(),
        artists: corpus.artists.clone(),
        theta,
        phi,
        phi_floor,
        psi,
        lambda,
        user_logs: c.user_logs.iter().map(|&n| n as u64).collect(),
    }
}

impl PointEstimates {
    pub fn topics(&self) -> usize {
        self.hyperparameters.topics
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_artists(&self) -> usize {
        self.artists.len()
    }

    pub fn variant(&self) -> Variant {
        self.hyperparameters.variant
    }

    pub fn user_index(&self, user: &str) -> Option<usize> {
        self.users.binary_search_by(|u| u.as_str().cmp(user)).ok()
    }

    pub fn artist_index(&self, artist: &str) -> Option<usize> {
        self.artists.binary_search_by(|a| a.as_str().cmp(artist)).ok()
    }

    #[inline]
    pub fn theta(&self, u: usize, k: usize) -> f64 {
        self.theta[u * self.topics() + k]
    }

    #[inline]
    pub fn phi(&self, k: usize, a: usize) -> f64 {
        self.phi[k * self.num_artists() + a]
    }

    #[inline]
    pub fn psi(&self, u: usize, a: usize) -> f64 {
        self.psi[u].get(a as u32)
    }

    pub fn theta_row(&self, u: usize) -> &[f64] {
        &self.theta[u * self.topics()..(u + 1) * self.topics()]
    }

    pub fn phi_row(&self, k: usize) -> &[f64] {
        &self.phi[k * self.num_artists()..(k + 1) * self.num_artists()]
    }

    /// lambda_0 sum_k theta_uk phi_ka + lambda_1 psi_ua, by index.
    #[inline]
    pub fn song_prob_index(&self, u: usize, a: usize) -> f64 {
        let topic_part: f64 = (0..self.topics()).map(|k| self.theta(u, k) * self.phi(k, a)).sum();
        let [l0, l1] = self.lambda[u];
        l0 * topic_part + l1 * self.psi(u, a)
    }

    /// Predictive probability that `user` picks `artist` for a song.
    pub fn song_prob(&self, user: &str, artist: &str) -> Result<f64> {
        let u = self.user_index(user).ok_or_else(|| Error::Lookup {
            kind: "user",
            id: user.to_owned(),
        })?;
        let a = self.artist_index(artist).ok_or_else(|| Error::Lookup {
            kind: "artist",
            id: artist.to_owned(),
        })?;
        Ok(self.song_prob_index(u, a))
    }

    /// Largest deviation from 1 over all theta, phi and psi rows and lambda
    /// pairs.
    pub fn max_normalization_error(&self) -> f64 {
        let a = self.num_artists();
        let theta = (0..self.num_users()).map(|u| (self.theta_row(u).iter().sum::<f64>() - 1.0).abs());
        let phi = (0..self.topics()).map(|k| (self.phi_row(k).iter().sum::<f64>() - 1.0).abs());
        let psi = self.psi.iter().map(|row| (row.sum(a) - 1.0).abs());
        let lambda = self.lambda.iter().map(|l| (l[0] + l[1] - 1.0).abs());
        theta.chain(phi).chain(psi).chain(lambda).fold(0.0, f64::max)
    }

    /// Smallest entry over theta, phi, psi; positive by smoothing.
    pub fn min_entry(&self) -> f64 {
        let psi_min = self
            .psi
            .iter()
            .flat_map(|r| r.entries.iter().map(|e| e.1).chain(std::iter::once(r.floor)))
            .fold(f64::INFINITY, f64::min);
        self.theta
            .iter()
            .chain(self.phi.iter())
            .copied()
            .fold(psi_min, f64::min)
    }
}

// ---- perplexity ------------------------------------------------------------

/// Summation order for the log-likelihood total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Summation {
    #[default]
    Sequential,
    Pairwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerplexityReport {
    pub perplexity: f64,
    pub log_likelihood: f64,
    pub evaluated: usize,
    /// Logs whose user or artist is unknown to the model.
    pub skipped: usize,
    pub skipped_unknown_user: usize,
    pub skipped_unknown_artist: usize,
}

pub fn perplexity(test: &SessionizedDataset, est: &PointEstimates) -> Result<PerplexityReport> {
    perplexity_with(test, est, Summation::Sequential)
}

/// exp(- sum ln p(a) / n) over the test logs whose user and artist are both
/// known; other logs are counted as skipped.
pub fn perplexity_with(
    test: &SessionizedDataset,
    est: &PointEstimates,
    summation: Summation,
) -> Result<PerplexityReport> {
    let per_user: Vec<(Vec<f64>, usize, usize)> = test
        .users
        .par_iter()
        .map(|user| match est.user_index(&user.user_id) {
            None => (Vec::new(), user.num_logs(), 0),
            Some(u) => {
                let mut lps = Vec::with_capacity(user.num_logs());
                let mut unknown = 0;
                for log in user.logs() {
                    match est.artist_index(&log.artist_id) {
                        Some(a) => lps.push(est.song_prob_index(u, a).ln()),
                        None => unknown += 1,
                    }
                }
                (lps, 0, unknown)
            }
        })
        .collect();
    let skipped_unknown_user = per_user.iter().map(|p| p.1).sum::<usize>();
    let skipped_unknown_artist = per_user.iter().map(|p| p.2).sum::<usize>();
    let lps: Vec<f64> = per_user.into_iter().flat_map(|p| p.0).collect();
    if lps.is_empty() {
        return Err(Error::Empty("no test log has a known user and artist".into()));
    }
    let log_likelihood = match summation {
        Summation::Sequential => lps.iter().sum(),
        Summation::Pairwise => pairwise_sum(&lps),
    };
    let evaluated = lps.len();
    if skipped_unknown_user + skipped_unknown_artist > 0 {
        log::warn!(
            "perplexity: skipped {} logs of unknown users and {} of unknown artists",
            skipped_unknown_user,
            skipped_unknown_artist
        );
    }
    Ok(PerplexityReport {
        perplexity: (-log_likelihood / evaluated as f64).exp(),
        log_likelihood,
        evaluated,
        skipped: skipped_unknown_user + skipped_unknown_artist,
        skipped_unknown_user,
        skipped_unknown_artist,
    })
}

// ---- files -----------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct SparseMatrix {
    /// Row default for entries not listed.
    floor: Vec<f64>,
    /// (row, artist, value)
    triplets: Vec<(u32, u32, f64)>,
}

#[derive(Serialize, Deserialize)]
struct EstimatesFile {
    provenance: serde_json::Value,
    hyperparameters: Hyperparameters,
    users: Vec<String>,
    artists: Vec<String>,
    theta: Vec<Vec<f64>>,
    phi: SparseMatrix,
    psi: SparseMatrix,
    lambda: Vec<[f64; 2]>,
    user_logs: Vec<u64>,
}

impl PointEstimates {
    /// Structured export: dense theta, phi and psi as floor + triplets,
    /// lambda per user. `provenance` must be JSON.
    pub fn write_json<W: Write>(&self, mut w: W, provenance: &str) -> Result<()> {
        let k = self.topics();
        let mut phi_triplets = Vec::new();
        for kk in 0..k {
            for (a, &v) in self.phi_row(kk).iter().enumerate() {
                if v != self.phi_floor[kk] {
                    phi_triplets.push((kk as u32, a as u32, v));
                }
            }
        }
        let file = EstimatesFile {
            provenance: serde_json::from_str(provenance)?,
            hyperparameters: self.hyperparameters,
            users: self.users.clone(),
            artists: self.artists.clone(),
            theta: (0..self.num_users()).map(|u| self.theta_row(u).to_vec()).collect(),
            phi: SparseMatrix {
                floor: self.phi_floor.clone(),
                triplets: phi_triplets,
            },
            psi: SparseMatrix {
                floor: self.psi.iter().map(|r| r.floor).collect(),
                triplets: self
                    .psi
                    .iter()
                    .enumerate()
                    .flat_map(|(u, r)| r.entries.iter().map(move |&(a, v)| (u as u32, a, v)))
                    .collect(),
            },
            lambda: self.lambda.clone(),
            user_logs: self.user_logs.clone(),
        };
        serde_json::to_writer_pretty(&mut w, &file)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self> {
        let f: EstimatesFile = serde_json::from_reader(r)?;
        let bad = |m: &str| Error::Malformed {
            line_no: 0,
            reason: format!("estimates file: {m}"),
        };
        let (n_users, n_artists, k) = (f.users.len(), f.artists.len(), f.hyperparameters.topics);
        if !f.users.windows(2).all(|w| w[0] < w[1]) || !f.artists.windows(2).all(|w| w[0] < w[1]) {
            return Err(bad("user and artist ids must be sorted and unique"));
        }
        if f.theta.len() != n_users || f.theta.iter().any(|r| r.len() != k) {
            return Err(bad("theta shape"));
        }
        if f.phi.floor.len() != k || f.psi.floor.len() != n_users || f.lambda.len() != n_users {
            return Err(bad("row counts"));
        }
        let mut phi = Vec::with_capacity(k * n_artists);
        for floor in &f.phi.floor {
            phi.extend(std::iter::repeat_n(*floor, n_artists));
        }
        for &(kk, a, v) in &f.phi.triplets {
            if kk as usize >= k || a as usize >= n_artists {
                return Err(bad("phi triplet out of range"));
            }
            phi[kk as usize * n_artists + a as usize] = v;
        }
        let mut psi: Vec<SmoothedRow> = f
            .psi
            .floor
            .iter()
            .map(|&floor| SmoothedRow {
                entries: Vec::new(),
                floor,
            })
            .collect();
        for &(u, a, v) in &f.psi.triplets {
            if u as usize >= n_users || a as usize >= n_artists {
                return Err(bad("psi triplet out of range"));
            }
            psi[u as usize].entries.push((a, v));
        }
        for row in &mut psi {
            row.entries.sort_by_key(|e| e.0);
        }
        Ok(PointEstimates {
            hyperparameters: f.hyperparameters,
            theta: f.theta.into_iter().flatten().collect(),
            users: f.users,
            artists: f.artists,
            phi,
            phi_floor: f.phi.floor,
            psi,
            lambda: f.lambda,
            user_logs: f.user_logs,
        })
    }

    pub fn save(&self, path: &Path, provenance: &str) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_json(BufWriter::new(file), provenance)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_json(BufReader::new(file))
    }
}

/// One row of a perplexity table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub dataset: String,
    pub variant: Variant,
    pub topics: usize,
    pub seed: u64,
    pub perplexity: f64,
    pub evaluated: usize,
    pub skipped: usize,
    pub train_fingerprint: String,
    pub test_fingerprint: String,
}

pub const EVAL_HEADER: &str =
    "dataset\tvariant\ttopics\tseed\tperplexity\tevaluated\tskipped\ttrain_fingerprint\ttest_fingerprint";

pub fn write_eval_report<W: Write>(mut w: W, rows: &[EvalRow], provenance: &str) -> Result<()> {
    provenance::write_header(&mut w, provenance)?;
    writeln!(w, "{EVAL_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.dataset,
            r.variant,
            r.topics,
            r.seed,
            r.perplexity,
            r.evaluated,
            r.skipped,
            r.train_fingerprint,
            r.test_fingerprint
        )?;
    }
    w.flush()?;
    Ok(())
}
