use super::levels::{level_diagram, LevelDiagram};
use super::params::{FieldConfig, SivParams};
use super::phonon::{boltzmann_factor, phonon_rates};
use crate::error::{Result, SimError};
use serde::Serialize;

/// Every rate the jump and density-matrix engines need, in s⁻¹.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateSet {
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    /// Spin-conserving and spin-flipping LB′ → LB decay.
    pub gamma_par: f64,
    pub gamma_perp: f64,
    /// Scattering rate on the addressed transition.
    pub r_scatter: f64,
    /// Excitation rate of the non-addressed spin state.
    pub r_off: f64,
    pub gamma_t1: f64,
    /// T₁ split by detailed balance at f_qubit: ↑→↓ and ↓→↑.
    pub t1_down: f64,
    pub t1_up: f64,
    /// Spin-conserving fractions for decays from ↓′ and ↑′.
    pub eta_down: f64,
    pub eta_up: f64,
    pub branch_ub: f64,
    /// Total LB′ decay rate 1/τ_opt.
    pub gamma_optical: f64,
    /// UB → LB relaxation, 1/τ_UB.
    pub gamma_ub: f64,
    pub f_qubit: f64,
    pub delta_gs: f64,
    pub temperature: f64,
}

/// Scattering rate `r_max·s/(1+s)` of a transition driven at saturation `s`.
pub fn scatter_rate(params: &SivParams, saturation: f64) -> Result<f64> {
    if !(saturation >= 0.0) {
        return Err(SimError::param("saturation", format!("must be non-negative, got {saturation}")));
    }
    if saturation.is_infinite() {
        return Ok(params.r_max);
    }
    Ok(params.r_max * saturation / (1.0 + saturation))
}

pub fn rate_set(params: &SivParams, field: &FieldConfig, temperature: f64, saturation: f64) -> Result<RateSet> {
    let diagram = level_diagram(params, field)?;
    rate_set_from(params, &diagram, temperature, saturation)
}

/// Same as [`rate_set`] with a precomputed level diagram.
pub fn rate_set_from(params: &SivParams, d: &LevelDiagram, temperature: f64, saturation: f64) -> Result<RateSet> {
    let r_scatter = scatter_rate(params, saturation)?;
    let ph = phonon_rates(params, d.delta_gs, temperature)?;
    let gamma_optical = 1.0 / params.tau_optical;
    let lb_fraction = 1.0 - params.branch_ub;
    // a vanishing qubit splitting leaves both directions equally likely
    let x = if d.f_qubit > 0.0 { boltzmann_factor(d.f_qubit, temperature) } else { 1.0 };
    Ok(RateSet {
        gamma_plus: ph.gamma_plus,
        gamma_minus: ph.gamma_minus,
        gamma_par: gamma_optical * lb_fraction * d.eta_down,
        gamma_perp: gamma_optical * lb_fraction * (1.0 - d.eta_down),
        r_scatter,
        r_off: params.off_resonant_fraction * r_scatter,
        gamma_t1: params.gamma_t1,
        t1_down: params.gamma_t1 / (1.0 + x),
        t1_up: params.gamma_t1 * x / (1.0 + x),
        eta_down: d.eta_down,
        eta_up: d.eta_up,
        branch_ub: params.branch_ub,
        gamma_optical,
        gamma_ub: 1.0 / params.tau_ub,
        f_qubit: d.f_qubit,
        delta_gs: d.delta_gs,
        temperature,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invariants() {
        let p = SivParams::default();
        for &(b, a, t) in &[(2700.0, 0.2, 0.1), (2900.0, 88.0, 4.0), (500.0, 45.0, 0.6)] {
            let f = FieldConfig::new(b, a).unwrap();
            let r = rate_set(&p, &f, t, 1.0).unwrap();
            assert!(r.gamma_plus <= r.gamma_minus);
            let total = (r.gamma_par + r.gamma_perp) / (1.0 - p.branch_ub);
            assert!((total * p.tau_optical - 1.0).abs() < 1e-12);
            assert!((r.t1_down + r.t1_up - p.gamma_t1).abs() < 1e-15);
            assert!((r.r_scatter - p.r_max / 2.0).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_saturation() {
        let p = SivParams::default();
        let r = rate_set(&p, &FieldConfig::new(2700.0, 0.0).unwrap(), 0.1, 0.0).unwrap();
        assert_eq!(r.r_scatter, 0.0);
        assert_eq!(r.r_off, 0.0);
        assert!(scatter_rate(&p, -1.0).is_err());
    }

    #[test]
    fn cold_ratio() {
        let p = SivParams {
            lambda_so: 48e9,
            strain_x: 0.0,
            strain_y: 0.0,
            ..SivParams::default()
        };
        let r = rate_set(&p, &FieldConfig::new(0.0, 0.0).unwrap(), 0.1, 1.0).unwrap();
        assert!(r.gamma_plus / r.gamma_minus < 1e-9);
    }
}
