//! Recovery experiments, the Block Assumption and the error bounds.

mod block;
mod bounds;
mod phase;
mod trial;

pub use block::{block_assumption_check, BlockCheck, BLOCK_RETRIES, BLOCK_TOL};
pub use bounds::{error_bound_noiseless, error_bound_noisy};
pub use phase::{phase_grid, trial_seed, PhaseCell, PhaseConfig, PhaseGrid};
pub use trial::{
    exact_recovery_trial, not_applicable, run_trial, BoundContext, MatrixDescriptor,
    OperatorDescriptor, TrialConfig, TrialRecord, TrialSpec, BOUND_SLACK,
};
