//! Numerical engines: density-matrix evolution for coherent control and a
//! classical jump process over the optical levels for pumping and readout.

mod density;
pub mod jump;
mod lindblad;
mod pulse;

pub use density::{expectation, pauli, CMatrix, DensityMatrix, HERMITIAN_TOL, POSITIVITY_TOL, TRACE_TOL};
pub use jump::{
    expected_emissions, first_passage, jump_trajectory, jump_trajectory_with, mean_first_passage, occupation_integral, occupations, propagate,
    simulate_window, Detector, LevelGraph, LevelSet, TrajectoryRecord, Transition, WindowOutcome, N_LEVELS,
};
pub use lindblad::{evolve, max_step, unitary, JumpOperator, STEP_LIMIT};
pub use pulse::{apply_mw_pulse, lift, mw_unitary, qubit_unitary, FrequencyTrace};
