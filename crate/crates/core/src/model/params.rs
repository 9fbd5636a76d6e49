use crate::error::{Result, SimError};
use serde::{Deserialize, Serialize};

/// Physical constants of one SiV⁻ emitter plus the optical setup around it.
///
/// Frequencies are in Hz, times in s, rates in s⁻¹. Numeric defaults are
/// not written here: they come from the shipped `defaults.cfg`
/// (see [`crate::config::defaults`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SivParams {
    /// Ground-state spin-orbit splitting.
    pub lambda_so: f64,
    pub strain_x: f64,
    pub strain_y: f64,
    pub g_spin: f64,
    /// Orbital Zeeman quenching factor in the ground state.
    pub q_orbital: f64,
    /// Spin-orbit splitting of the optically excited state.
    pub lambda_so_excited: f64,
    /// Transverse strain acting on the excited state.
    pub strain_excited: f64,
    pub q_orbital_excited: f64,
    /// Excited-state (LB′) radiative lifetime.
    pub tau_optical: f64,
    /// Upper-branch metastable lifetime.
    pub tau_ub: f64,
    /// Single-phonon base rate: γ₋ at zero temperature.
    pub gamma0_phonon: f64,
    /// Probability that an optical decay lands in the upper branch.
    pub branch_ub: f64,
    /// Total intrinsic qubit relaxation rate 1/T₁.
    pub gamma_t1: f64,
    /// Relative rms g-factor fluctuation (quasi-static dephasing).
    pub delta_g: f64,
    /// Scattering-rate ceiling reached at infinite laser saturation.
    pub r_max: f64,
    /// Off-resonant excitation of the non-addressed spin state, as a fraction
    /// of the resonant scattering rate.
    pub off_resonant_fraction: f64,
    /// Photon collection and detection efficiency.
    pub eta_collect: f64,
    /// Detector dark-count rate.
    pub dark_count_rate: f64,
    /// Detector dead time after each registered photon.
    pub dead_time: f64,
}

impl SivParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda_so", self.lambda_so),
            ("lambda_so_excited", self.lambda_so_excited),
            ("tau_optical", self.tau_optical),
            ("tau_ub", self.tau_ub),
            ("gamma0_phonon", self.gamma0_phonon),
            ("gamma_t1", self.gamma_t1),
            ("r_max", self.r_max),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SimError::param(name, format!("must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("delta_g", self.delta_g),
            ("off_resonant_fraction", self.off_resonant_fraction),
            ("dark_count_rate", self.dark_count_rate),
            ("dead_time", self.dead_time),
            ("g_spin", self.g_spin),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(SimError::param(name, format!("must be non-negative, got {v}")));
            }
        }
        for (name, v) in [
            ("strain_x", self.strain_x),
            ("strain_y", self.strain_y),
            ("strain_excited", self.strain_excited),
        ] {
            if !v.is_finite() {
                return Err(SimError::param(name, "must be finite"));
            }
        }
        if !(0.0..1.0).contains(&self.branch_ub) {
            return Err(SimError::param("branch_ub", format!("must lie in [0, 1), got {}", self.branch_ub)));
        }
        for (name, v) in [("q_orbital", self.q_orbital), ("q_orbital_excited", self.q_orbital_excited)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(SimError::param(name, format!("must lie in [0, 1], got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.eta_collect) {
            return Err(SimError::param("eta_collect", format!("must lie in [0, 1], got {}", self.eta_collect)));
        }
        Ok(())
    }

    /// Zero-field ground-state splitting sqrt(λ² + 4|Υ|²).
    pub fn delta_gs_zero_field(&self) -> f64 {
        (self.lambda_so.powi(2) + 4.0 * (self.strain_x.powi(2) + self.strain_y.powi(2))).sqrt()
    }

    pub fn delta_es_zero_field(&self) -> f64 {
        (self.lambda_so_excited.powi(2) + 4.0 * self.strain_excited.powi(2)).sqrt()
    }
}

impl Default for SivParams {
    fn default() -> Self {
        crate::config::defaults().system.params.clone()
    }
}

/// Static magnetic field: magnitude in gauss, angle to the SiV axis in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldConfig {
    pub b_mag: f64,
    pub alpha: f64,
}

impl FieldConfig {
    pub fn new(b_mag: f64, alpha: f64) -> Result<Self> {
        let f = Self { b_mag, alpha };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b_mag >= 0.0 && self.b_mag.is_finite()) {
            return Err(SimError::param("b_mag", format!("must be non-negative, got {}", self.b_mag)));
        }
        if !(0.0..=90.0).contains(&self.alpha) {
            return Err(SimError::param("alpha", format!("must lie in [0°, 90°], got {}", self.alpha)));
        }
        Ok(())
    }

    /// Field components (B_⊥, B_∥) in gauss, with the perpendicular part along x.
    pub fn components(&self) -> (f64, f64) {
        let a = self.alpha.to_radians();
        (self.b_mag * a.sin(), self.b_mag * a.cos())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        SivParams::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_branching() {
        let mut p = SivParams::default();
        p.branch_ub = 1.0;
        assert!(p.validate().is_err());
        p.branch_ub = 0.1;
        p.tau_ub = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn field_range() {
        assert!(FieldConfig::new(100.0, 91.0).is_err());
        assert!(FieldConfig::new(-1.0, 0.0).is_err());
        let f = FieldConfig::new(2.0, 90.0).unwrap();
        let (bx, bz) = f.components();
        assert!((bx - 2.0).abs() < 1e-12 && bz.abs() < 1e-12);
    }
}
