//! Latent assignments, sufficient statistics and the collapsed Gibbs sampler
//! for the session model and the session-with-addiction (SWA) model.

mod checkpoint;
mod corpus;
mod counts;
mod state;
mod train;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use corpus::{Corpus, SessionSpan};
pub use counts::{CountTables, SparseCounts};
pub use state::{ModelState, SweepStats};
pub use train::{resume, train, Schedule, TraceEntry, TrainOutput};

/// Which generative model the sampler targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Topic-only session model; every log is taste-driven.
    Session,
    /// Session model with a per-user addiction component.
    Swa,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Session => "session",
            Variant::Swa => "swa",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "session" => Ok(Variant::Session),
            "swa" => Ok(Variant::Swa),
            other => Err(Error::config(
                "variant",
                format!("expected `session` or `swa`, got `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub topics: usize,
    /// Dirichlet concentration of the user-topic distributions.
    pub alpha: f64,
    /// Dirichlet concentration of the topic-artist distributions.
    pub beta: f64,
    /// Dirichlet concentration of the user-artist addiction distributions.
    pub gamma: f64,
    /// Beta concentration of the taste/addiction mixture.
    pub rho: f64,
    pub variant: Variant,
}

impl Hyperparameters {
    /// alpha = 1/K, beta = gamma = 50/|A|, rho = 0.5.
    pub fn with_defaults(topics: usize, num_artists: usize, variant: Variant) -> Self {
        let artists = num_artists.max(1) as f64;
        Hyperparameters {
            topics,
            alpha: 1.0 / topics.max(1) as f64,
            beta: 50.0 / artists,
            gamma: 50.0 / artists,
            rho: 0.5,
            variant,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.topics == 0 {
            return Err(Error::config("topics", "must be at least 1"));
        }
        if self.topics > u32::MAX as usize {
            return Err(Error::config("topics", "too many topics"));
        }
        for (field, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("rho", self.rho),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(field, format!("must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let hp = Hyperparameters::with_defaults(30, 6431, Variant::Swa);
        assert_eq!(hp.alpha, 1.0 / 30.0);
        assert_eq!(hp.beta, 50.0 / 6431.0);
        assert_eq!(hp.gamma, 50.0 / 6431.0);
        assert_eq!(hp.rho, 0.5);
        hp.validate().unwrap();
    }

    #[test]
    fn invalid_fields_are_named() {
        let mut hp = Hyperparameters::with_defaults(3, 10, Variant::Swa);
        hp.rho = 0.0;
        assert!(matches!(hp.validate(), Err(Error::InvalidConfig { field: "rho", .. })));
        hp.rho = 0.5;
        hp.topics = 0;
        assert!(matches!(
            hp.validate(),
            Err(Error::InvalidConfig { field: "topics", .. })
        ));
    }

    #[test]
    fn variant_parse() {
        assert_eq!("SWA".parse::<Variant>().unwrap(), Variant::Swa);
        assert!("lda".parse::<Variant>().is_err());
    }
}
