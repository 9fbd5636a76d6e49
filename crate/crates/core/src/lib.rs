//! Simulator for the negatively charged silicon-vacancy (SiV⁻) spin qubit in
//! diamond at millikelvin temperatures.
//!
//! The crate is layered bottom-up:
//!
//! * [`model`] — ground/excited Hamiltonians, level diagram, phonon rates and
//!   optical branching, assembled into a [`model::RateSet`];
//! * [`engine`] — density-matrix evolution for microwave control and an
//!   exact jump process over the six optical levels for pumping and readout;
//! * [`noise`] — classical dephasing baths, CPMG filter functions and
//!   Monte Carlo phase accumulation;
//! * [`sequence`] — pulse-sequence IR, builders and the shot runner;
//! * [`readout`] — photon-count histograms and threshold fidelities;
//! * [`analysis`] — least-squares fits for decays, oscillations and scalings;
//! * [`config`] and [`experiment`] — config documents and end-to-end runs.
//!
//! Every stochastic quantity is drawn from a per-(point, shot) ChaCha stream
//! ([`rng`]), so results do not depend on the number of worker threads.

pub mod analysis;
pub mod calibration;
pub mod config;
pub mod constants;
pub mod engine;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod model;
pub mod noise;
pub mod quad;
pub mod readout;
pub mod rng;
pub mod sequence;

pub use error::{Result, SimError};
