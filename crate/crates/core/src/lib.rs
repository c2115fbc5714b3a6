//! Session and session-with-addiction (SWA) models of music listening.
//!
//! Play logs are cut into sessions, each session draws a topic from the
//! user's topic mixture, and every play is either taste-driven (artist drawn
//! from the session topic) or addiction-driven (artist drawn from the user's
//! personal artist distribution). Inference is collapsed Gibbs sampling over
//! session topics and per-play mode flags.
//!
//! Modules follow the pipeline: [`ingest`] → [`model`] → [`evaluation`] and
//! [`analysis`]; [`synth`] runs the generative process forward for testing;
//! [`cli`] is the command-line front end.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod evaluation;
pub mod ingest;
pub mod model;
pub mod numerics;
pub mod provenance;
pub mod synth;

pub use error::{Error, Result};
