use super::levels::level_diagram;
use super::params::{FieldConfig, SivParams};
use crate::constants::H_OVER_KB;
use crate::error::{Result, SimError};
use serde::Serialize;

/// Orbital relaxation between the lower and upper ground branches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhononRates {
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    /// Thermal-equilibrium population of the lower branch.
    pub orbital_polarization: f64,
}

fn check_temperature(temperature: f64) -> Result<()> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(SimError::param("temperature", format!("must be positive, got {temperature}")));
    }
    Ok(())
}

/// e^{−hΔ/k_BT}.
pub fn boltzmann_factor(delta: f64, temperature: f64) -> f64 {
    (-H_OVER_KB * delta / temperature).exp()
}

/// Bose–Einstein occupation at frequency `delta` (Hz).
pub fn bose_occupation(delta: f64, temperature: f64) -> f64 {
    1.0 / (H_OVER_KB * delta / temperature).exp_m1()
}

pub fn phonon_rates(params: &SivParams, delta_gs: f64, temperature: f64) -> Result<PhononRates> {
    check_temperature(temperature)?;
    if !(delta_gs > 0.0) {
        return Err(SimError::param("delta_gs", format!("must be positive, got {delta_gs}")));
    }
    let n = bose_occupation(delta_gs, temperature);
    let ratio = boltzmann_factor(delta_gs, temperature);
    // γ₊ = γ₋·e^{−x} is algebraically identical to γ0·n̄ and keeps the
    // detailed-balance ratio exact to rounding.
    let gamma_minus = params.gamma0_phonon * (n + 1.0);
    Ok(PhononRates {
        gamma_plus: gamma_minus * ratio,
        gamma_minus,
        orbital_polarization: 1.0 / (1.0 + ratio),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlePoint {
    /// Laser detuning from transition C (Hz).
    pub detuning: f64,
    pub intensity: f64,
}

/// Two-peak PLE spectrum: C (from LB) at zero detuning and D (from UB) at
/// −Δ_GS, Lorentzians of FWHM `linewidth`, normalised to I_C = 1.
///
/// The grid spans both peaks with `linewidth/4` resolution near each line.
pub fn ple_spectrum(params: &SivParams, field: &FieldConfig, temperature: f64, linewidth: f64) -> Result<Vec<PlePoint>> {
    check_temperature(temperature)?;
    if !(linewidth > 0.0 && linewidth.is_finite()) {
        return Err(SimError::param("linewidth", format!("must be positive, got {linewidth}")));
    }
    let delta = level_diagram(params, field)?.delta_gs;
    let ratio = boltzmann_factor(delta, temperature);
    let hw = 0.5 * linewidth;
    let lorentz = |x: f64| hw * hw / (x * x + hw * hw);

    let mut grid = Vec::new();
    for centre in [-delta, 0.0] {
        let n = 161;
        for k in 0..n {
            grid.push(centre + (k as f64 - (n / 2) as f64) * linewidth / 4.0);
        }
    }
    let lo = -delta - 20.0 * linewidth;
    let hi = 20.0 * linewidth;
    for k in 0..=200 {
        grid.push(lo + (hi - lo) * k as f64 / 200.0);
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-9 * linewidth);

    Ok(grid
        .into_iter()
        .map(|x| PlePoint {
            detuning: x,
            intensity: lorentz(x) + ratio * lorentz(x + delta),
        })
        .collect())
}

/// Peak ratio I_D/I_C read off a spectrum at the two line centres.
pub fn ple_peak_ratio(spectrum: &[PlePoint], delta_gs: f64) -> Option<f64> {
    let at = |x: f64| {
        spectrum
            .iter()
            .min_by(|a, b| (a.detuning - x).abs().total_cmp(&(b.detuning - x).abs()))
            .map(|p| p.intensity)
    };
    Some(at(-delta_gs)? / at(0.0)?)
}
