//! Physical constants, pinned to the CODATA 2018 exact values where defined.

/// Planck constant (J·s).
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Bohr magneton over Planck constant (Hz per gauss).
pub const MU_B_HZ_PER_G: f64 = 1.399_624_6e6;

/// ¹³C nuclear gyromagnetic ratio (Hz per gauss).
pub const GAMMA_C13_HZ_PER_G: f64 = 1.0705e3;

/// `h / k_B` in kelvin per hertz.
pub const H_OVER_KB: f64 = PLANCK / BOLTZMANN;

pub const TAU: f64 = std::f64::consts::TAU;
