use super::NoiseModel;
use crate::constants::{GAMMA_C13_HZ_PER_G, TAU};
use crate::engine::CMatrix;
use crate::error::{Result, SimError};
use num_complex::Complex64;

/// Nuclear precession frequencies (rad/s) in the two electron manifolds and
/// the modulation depth parameter k.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EseemFrequencies {
    pub omega_i: f64,
    pub omega_alpha: f64,
    pub omega_beta: f64,
    pub k: f64,
}

pub fn eseem_frequencies(a_par: f64, a_perp: f64, b_mag: f64) -> EseemFrequencies {
    let wi = TAU * GAMMA_C13_HZ_PER_G * b_mag;
    let (a, b) = (TAU * a_par, TAU * a_perp);
    let wa = ((wi + 0.5 * a).powi(2) + (0.5 * b).powi(2)).sqrt();
    let wb = ((wi - 0.5 * a).powi(2) + (0.5 * b).powi(2)).sqrt();
    let k = if wa > 0.0 && wb > 0.0 { (b * wi / (wa * wb)).powi(2) } else { 0.0 };
    EseemFrequencies {
        omega_i: wi,
        omega_alpha: wa,
        omega_beta: wb,
        k,
    }
}

/// Two-pulse echo amplitude after π/2 – τ – π – τ with one ¹³C:
/// V = 1 − (k/2)(1 − cos ω_α τ)(1 − cos ω_β τ).
pub fn eseem_echo(model: &NoiseModel, tau: f64) -> Result<f64> {
    let NoiseModel::SingleC13 { a_par, a_perp, b_mag } = *model else {
        return Err(SimError::UnsupportedNoise {
            model: model.name(),
            operation: "eseem_echo",
        });
    };
    if !(b_mag > 0.0) {
        return Err(SimError::param("b_mag", "must be positive for echo modulation"));
    }
    let f = eseem_frequencies(a_par, a_perp, b_mag);
    Ok(1.0 - 0.5 * f.k * (1.0 - (f.omega_alpha * tau).cos()) * (1.0 - (f.omega_beta * tau).cos()))
}

/// Electron ⊗ ¹³C Hamiltonian (Hz) in the rotating frame, electron basis
/// (↑, ↓): γ_C·B·I_z + S_z(A∥ I_z + A⊥ I_x).
pub fn c13_hamiltonian(a_par: f64, a_perp: f64, b_mag: f64) -> CMatrix {
    let c = |x: f64| Complex64::new(x, 0.0);
    let ix = CMatrix::from_row_slice(2, 2, &[c(0.0), c(0.5), c(0.5), c(0.0)]);
    let iz = CMatrix::from_row_slice(2, 2, &[c(0.5), c(0.0), c(0.0), c(-0.5)]);
    let sz = iz.clone();
    let id = CMatrix::identity(2, 2);
    let wi = GAMMA_C13_HZ_PER_G * b_mag;
    id.kronecker(&iz) * c(wi) + sz.kronecker(&(iz * c(a_par) + ix * c(a_perp)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{apply_mw_pulse, unitary, DensityMatrix};

    /// Direct 4×4 simulation of the two-pulse echo.
    fn echo_oracle(a_par: f64, a_perp: f64, b: f64, tau: f64) -> f64 {
        let h = c13_hamiltonian(a_par, a_perp, b);
        let u = unitary(&h, tau);
        let rho0 = DensityMatrix::diagonal(&[0.5, 0.5, 0.0, 0.0]).unwrap();
        let r = apply_mw_pulse(&rho0, 1e6, 0.0, 0.0, 0.25e-6, None).unwrap();
        let coh0 = (0..2).map(|k| r.coherence(k, 2 + k)).sum::<Complex64>().norm();
        let r = r.transformed(&u).unwrap();
        let r = apply_mw_pulse(&r, 1e6, 0.0, 0.0, 0.5e-6, None).unwrap();
        let r = r.transformed(&u).unwrap();
        (0..2).map(|k| r.coherence(k, 2 + k)).sum::<Complex64>().norm() / coh0
    }

    #[test]
    fn matches_direct_simulation() {
        let m = NoiseModel::SingleC13 {
            a_par: 150e3,
            a_perp: 90e3,
            b_mag: 200.0,
        };
        for &tau in &[1e-6, 2.3e-6, 4.1e-6, 7e-6, 11.9e-6] {
            let v = eseem_echo(&m, tau).unwrap();
            let o = echo_oracle(150e3, 90e3, 200.0, tau);
            assert!((v - o).abs() < 1e-9, "{tau}: {v} vs {o}");
        }
    }

    #[test]
    fn no_anisotropy_no_modulation() {
        let m = NoiseModel::SingleC13 {
            a_par: 300e3,
            a_perp: 0.0,
            b_mag: 200.0,
        };
        for k in 0..20 {
            assert_eq!(eseem_echo(&m, k as f64 * 0.37e-6).unwrap(), 1.0);
        }
    }

    #[test]
    fn larmor_frequency() {
        let f = eseem_frequencies(0.0, 0.0, 200.0);
        assert!((f.omega_i / TAU - 214.1e3).abs() < 1.0);
    }

    #[test]
    fn strong_field_suppression() {
        let mut last = f64::INFINITY;
        for b in [200.0, 400.0, 800.0, 2000.0] {
            let k = eseem_frequencies(150e3, 90e3, b).k;
            assert!(k < last);
            last = k;
        }
        assert!(eseem_frequencies(150e3, 90e3, 2000.0).k < eseem_frequencies(150e3, 90e3, 200.0).k / 10.0);
    }
}
