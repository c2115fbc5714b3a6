use serde::{Deserialize, Serialize};

use super::{Hyperparameters, ModelState};
use crate::error::{Error, Result};
use crate::evaluation::{estimate_parameters, PointEstimates};
use crate::ingest::SessionizedDataset;

/// Number of sweeps to run and how many of them count as burn-in. Burn-in
/// only marks the trace; estimates always come from the final state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub sweeps: u64,
    pub burn_in: u64,
}

impl Schedule {
    pub fn new(sweeps: u64, burn_in: u64) -> Result<Self> {
        if sweeps <= burn_in {
            return Err(Error::config(
                "sweeps",
                format!("sweeps ({sweeps}) must exceed burn-in ({burn_in})"),
            ));
        }
        Ok(Schedule { sweeps, burn_in })
    }
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule {
            sweeps: 1000,
            burn_in: 800,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub sweep: u64,
    pub log_joint: f64,
    pub burn_in: bool,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub state: ModelState,
    pub estimates: PointEstimates,
    pub trace: Vec<TraceEntry>,
}

/// Initializes a chain and runs the full schedule.
pub fn train(dataset: &SessionizedDataset, hp: Hyperparameters, schedule: Schedule, seed: u64) -> Result<TrainOutput> {
    let state = ModelState::init(dataset, hp, seed)?;
    resume(state, schedule)
}

/// Runs an existing chain until it has completed `schedule.sweeps` sweeps.
pub fn resume(mut state: ModelState, schedule: Schedule) -> Result<TrainOutput> {
    Schedule::new(schedule.sweeps, schedule.burn_in)?;
    if state.sweeps_done() > schedule.sweeps {
        return Err(Error::config(
            "sweeps",
            format!("chain already ran {} sweeps", state.sweeps_done()),
        ));
    }
    let mut trace = Vec::with_capacity((schedule.sweeps - state.sweeps_done()) as usize);
    let report_every = (schedule.sweeps / 10).max(1);
    while state.sweeps_done() < schedule.sweeps {
        let stats = state.gibbs_sweep();
        if stats.sweep.is_multiple_of(report_every) {
            log::info!(
                "sweep {}/{} log joint {:.4} ({:.1} ms)",
                stats.sweep,
                schedule.sweeps,
                stats.log_joint,
                stats.elapsed.as_secs_f64() * 1e3
            );
        }
        trace.push(TraceEntry {
            sweep: stats.sweep,
            log_joint: stats.log_joint,
            burn_in: stats.sweep <= schedule.burn_in,
        });
    }
    let estimates = estimate_parameters(&state);
    Ok(TrainOutput {
        state,
        estimates,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Variant;

    #[test]
    fn schedule_requires_sweeps_above_burn_in() {
        assert!(Schedule::new(10, 10).is_err());
        assert!(Schedule::new(11, 10).is_ok());
        assert!(Schedule::new(1, 0).is_ok());
    }

    #[test]
    fn resume_rejects_overrun_chain() {
        let ds = crate::synth::tiny_fixture();
        let hp = Hyperparameters::with_defaults(2, ds.num_artists(), Variant::Swa);
        let out = train(&ds, hp, Schedule::new(3, 0).unwrap(), 1).unwrap();
        assert_eq!(out.trace.len(), 3);
        assert!(resume(out.state, Schedule::new(2, 0).unwrap()).is_err());
    }
}
