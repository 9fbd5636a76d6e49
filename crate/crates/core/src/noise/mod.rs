//! Classical dephasing noise: models, samplers, filter-function predictions
//! and Monte Carlo phase accumulation.

mod eseem;
mod filter;
mod mc;
mod ou;
mod spectrum;
mod synth;

pub use eseem::{c13_hamiltonian, eseem_echo, eseem_frequencies, EseemFrequencies};
pub use filter::{chi, chi_spectral, coherence_decay, cpmg_filter, filter_over_omega2, pulse_times};
pub use mc::{mc_coherence, PhasePlan, PhaseSource};
pub use ou::{ou_spectrum, sample_ou, OuState};
pub use spectrum::TabulatedSpectrum;
pub use synth::{SpectrumSynth, SynthTrace};

use crate::constants::{MU_B_HZ_PER_G, TAU};
use crate::error::{Result, SimError};
use crate::model::{FieldConfig, SivParams};
use crate::rng::ShotRng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

/// Dephasing environment of the electron qubit.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum NoiseModel {
    /// Ornstein–Uhlenbeck frequency noise: rms `sigma` (rad/s), correlation time `tau_c` (s).
    Ou { sigma: f64, tau_c: f64 },
    /// Frequency offset drawn once per shot with rms `sigma` (rad/s).
    QuasiStatic { sigma: f64 },
    Tabulated(TabulatedSpectrum),
    /// One ¹³C nuclear spin with hyperfine components (Hz) at field `b_mag` (G).
    SingleC13 { a_par: f64, a_perp: f64, b_mag: f64 },
}

impl NoiseModel {
    pub fn name(&self) -> &'static str {
        match self {
            NoiseModel::Ou { .. } => "OU",
            NoiseModel::QuasiStatic { .. } => "QuasiStatic",
            NoiseModel::Tabulated(_) => "Tabulated",
            NoiseModel::SingleC13 { .. } => "SingleC13",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseModel::Ou { sigma, tau_c } => {
                if !(*sigma > 0.0 && sigma.is_finite()) {
                    return Err(SimError::param("sigma", format!("must be positive, got {sigma}")));
                }
                if !(*tau_c > 0.0) {
                    return Err(SimError::param("tau_c", format!("must be positive, got {tau_c}")));
                }
            }
            NoiseModel::QuasiStatic { sigma } => {
                if !(*sigma >= 0.0 && sigma.is_finite()) {
                    return Err(SimError::param("sigma", format!("must be non-negative, got {sigma}")));
                }
            }
            NoiseModel::Tabulated(s) => {
                TabulatedSpectrum::new(s.omega.clone(), s.s_of_omega.clone())?;
            }
            NoiseModel::SingleC13 { a_par, a_perp, b_mag } => {
                if !(a_par.is_finite() && a_perp.is_finite()) {
                    return Err(SimError::param("hyperfine", "must be finite"));
                }
                if !(*b_mag >= 0.0 && b_mag.is_finite()) {
                    return Err(SimError::param("b_mag", "must be non-negative"));
                }
            }
        }
        Ok(())
    }

    /// One-sided spectral density S(ω) in rad²/s, where defined.
    pub fn spectrum(&self, omega: f64) -> Result<f64> {
        match self {
            NoiseModel::Ou { sigma, tau_c } => Ok(ou_spectrum(*sigma, *tau_c, omega)),
            NoiseModel::Tabulated(s) => Ok(s.at(omega)),
            _ => Err(SimError::UnsupportedNoise {
                model: self.name(),
                operation: "spectrum",
            }),
        }
    }
}

/// rms qubit-frequency offset (rad/s) from g-factor fluctuations at `field`.
pub fn g_noise_sigma(params: &SivParams, field: &FieldConfig) -> f64 {
    TAU * params.delta_g * MU_B_HZ_PER_G * field.b_mag
}

/// One per-shot frequency offset (rad/s) from g-factor fluctuations.
pub fn sample_quasistatic_g(params: &SivParams, field: &FieldConfig, rng: &mut ShotRng) -> Result<f64> {
    field.validate()?;
    let z: f64 = StandardNormal.sample(rng);
    Ok(g_noise_sigma(params, field) * z)
}

/// Seeded convenience form of [`sample_quasistatic_g`].
pub fn sample_quasistatic_g_seeded(params: &SivParams, field: &FieldConfig, seed: u64) -> Result<f64> {
    let mut rng = crate::rng::single(seed);
    sample_quasistatic_g(params, field, &mut rng)
}
