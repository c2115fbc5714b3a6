//! Binary chain checkpoints: magic bytes, a format version, then a bincode
//! payload with the corpus, hyperparameters, assignments, seed, sweep
//! counter and the full RNG state.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Corpus, Hyperparameters, ModelState};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"SWACKPT\0";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Payload {
    provenance: String,
    hyperparameters: Hyperparameters,
    seed: u64,
    sweeps_done: u64,
    rng: ChaCha8Rng,
    topics: Vec<u32>,
    flags: Vec<u8>,
    corpus: Corpus,
}

pub fn write_checkpoint<W: Write>(mut w: W, state: &ModelState, provenance: &str) -> Result<()> {
    let payload = Payload {
        provenance: provenance.to_owned(),
        hyperparameters: *state.hyperparameters(),
        seed: state.seed(),
        sweeps_done: state.sweeps_done(),
        rng: state.rng().clone(),
        topics: state.topics_assigned().to_vec(),
        flags: state.flags().to_vec(),
        corpus: state.corpus().clone(),
    };
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    bincode::serialize_into(&mut w, &payload).map_err(|e| Error::Checkpoint(e.to_string()))?;
    w.flush()?;
    Ok(())
}

/// Returns the restored state and the provenance text stored with it.
pub fn read_checkpoint<R: Read>(mut r: R) -> Result<(ModelState, String)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Checkpoint("truncated header".into()))?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("not a checkpoint file".into()));
    }
    let mut version = [0u8; 4];
    r.read_exact(&mut version)
        .map_err(|_| Error::Checkpoint("truncated header".into()))?;
    let version = u32::from_le_bytes(version);
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let p: Payload = bincode::deserialize_from(r).map_err(|e| Error::Checkpoint(e.to_string()))?;
    let state = ModelState::from_parts(
        p.corpus,
        p.hyperparameters,
        p.topics,
        p.flags,
        p.rng,
        p.seed,
        p.sweeps_done,
    )?;
    Ok((state, p.provenance))
}

pub fn save_checkpoint(path: &Path, state: &ModelState, provenance: &str) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_checkpoint(BufWriter::new(file), state, provenance)
}

pub fn load_checkpoint(path: &Path) -> Result<(ModelState, String)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(BufReader::new(file))
}
