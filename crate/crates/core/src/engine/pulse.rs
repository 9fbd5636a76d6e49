use super::density::{CMatrix, DensityMatrix};
use crate::constants::TAU;
use crate::error::{Result, SimError};
use num_complex::Complex64;

/// Sample-and-hold frequency offsets (rad/s) on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTrace {
    pub dt: f64,
    pub values: Vec<f64>,
}

impl FrequencyTrace {
    pub fn span(&self) -> f64 {
        self.dt * self.values.len() as f64
    }
}

/// exp(−i H t) for H = (δ/2)σ_z + (Ω_x/2)σ_x + (Ω_y/2)σ_y, all angular.
pub fn qubit_unitary(omega_x: f64, omega_y: f64, delta: f64, t: f64) -> CMatrix {
    let (vx, vy, vz) = (0.5 * omega_x, 0.5 * omega_y, 0.5 * delta);
    let norm = (vx * vx + vy * vy + vz * vz).sqrt();
    let theta = norm * t;
    let (s, c) = theta.sin_cos();
    let (nx, ny, nz) = if norm > 0.0 { (vx / norm, vy / norm, vz / norm) } else { (0.0, 0.0, 0.0) };
    // cos θ·I − i sin θ·(n·σ)
    let a = Complex64::new(c, -s * nz);
    let d = Complex64::new(c, s * nz);
    let b = Complex64::new(-s * ny, -s * nx);
    let e = Complex64::new(s * ny, -s * nx);
    CMatrix::from_row_slice(2, 2, &[a, b, e, d])
}

/// Lifts a qubit operator to `U ⊗ I_k` on an electron ⊗ ancilla space.
pub fn lift(u: &CMatrix, dim: usize) -> Result<CMatrix> {
    if dim % 2 != 0 {
        return Err(SimError::DimensionMismatch { expected: 2, got: dim });
    }
    let k = dim / 2;
    if k == 1 {
        return Ok(u.clone());
    }
    Ok(u.kronecker(&CMatrix::identity(k, k)))
}

/// Rotating-frame microwave pulse on the electron qubit (basis ↑, ↓).
///
/// H = 2π·[(δ/2)σ_z + (Ω/2)(cos φ σ_x + sin φ σ_y)] with δ the qubit–drive
/// detuning `f_qubit − f_mw`; a π pulse lasts `1/(2Ω)`. A dephasing trace adds
/// its samples (rad/s) to 2πδ, held constant over each trace interval.
pub fn apply_mw_pulse(
    rho: &DensityMatrix,
    rabi: f64,
    detuning: f64,
    phase: f64,
    duration: f64,
    dephasing_trace: Option<&FrequencyTrace>,
) -> Result<DensityMatrix> {
    if !(rabi >= 0.0 && rabi.is_finite()) {
        return Err(SimError::param("rabi", format!("must be non-negative, got {rabi}")));
    }
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(SimError::param("duration", format!("must be non-negative, got {duration}")));
    }
    let u = mw_unitary(rabi, detuning, phase, duration, dephasing_trace)?;
    rho.transformed(&lift(&u, rho.dim())?)
}

/// Propagator of [`apply_mw_pulse`] on the bare qubit.
pub fn mw_unitary(rabi: f64, detuning: f64, phase: f64, duration: f64, trace: Option<&FrequencyTrace>) -> Result<CMatrix> {
    let om = TAU * rabi;
    let (ox, oy) = (om * phase.cos(), om * phase.sin());
    let delta0 = TAU * detuning;
    match trace {
        None => Ok(qubit_unitary(ox, oy, delta0, duration)),
        Some(tr) => {
            if !(tr.dt > 0.0) {
                return Err(SimError::param("trace.dt", "must be positive"));
            }
            if tr.span() < duration * (1.0 - 1e-12) {
                return Err(SimError::TraceTooShort {
                    covered: tr.span(),
                    required: duration,
                });
            }
            let mut u = CMatrix::identity(2, 2);
            let mut t = 0.0;
            let mut k = 0;
            while t < duration && k < tr.values.len() {
                let piece = tr.dt.min(duration - t);
                u = qubit_unitary(ox, oy, delta0 + tr.values[k], piece) * u;
                t += piece;
                k += 1;
            }
            Ok(u)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::density::pauli;
    use super::super::lindblad::unitary;
    use super::*;

    #[test]
    fn pi_and_half_pi() {
        let up = DensityMatrix::basis(2, 0).unwrap();
        let pi = apply_mw_pulse(&up, 5e6, 0.0, 0.0, 100e-9, None).unwrap();
        assert!(pi.population(1) >= 0.9999);
        let half = apply_mw_pulse(&up, 5e6, 0.0, 0.0, 50e-9, None).unwrap();
        assert!((half.coherence(0, 1).norm() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn free_precession_phase() {
        // phase 2π after 1/δ
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = DensityMatrix::pure(&[Complex64::new(s, 0.0), Complex64::new(s, 0.0)]).unwrap();
        let out = apply_mw_pulse(&plus, 0.0, 550e3, 0.0, 1.0 / 550e3, None).unwrap();
        let c = out.coherence(0, 1);
        assert!((c.arg()).abs() < 1e-6 && (c.norm() - 0.5).abs() < 1e-12);
        assert!((1.0f64 / 550e3 - 1.818e-6).abs() < 1e-9);
    }

    #[test]
    fn matches_generic_exponential() {
        let (rabi, det, ph, t) = (3e6, -1.2e6, 0.7f64, 137e-9);
        let h = (pauli::z() * Complex64::new(det / 2.0, 0.0))
            + (pauli::x() * Complex64::new(rabi / 2.0 * ph.cos(), 0.0))
            + (pauli::y() * Complex64::new(rabi / 2.0 * ph.sin(), 0.0));
        let u = mw_unitary(rabi, det, ph, t, None).unwrap();
        assert!((u - unitary(&h, t)).norm() < 1e-12);
    }

    #[test]
    fn trace_sample_and_hold() {
        let up = DensityMatrix::basis(2, 0).unwrap();
        let short = FrequencyTrace { dt: 10e-9, values: vec![0.0; 5] };
        assert!(matches!(
            apply_mw_pulse(&up, 5e6, 0.0, 0.0, 100e-9, Some(&short)),
            Err(SimError::TraceTooShort { .. })
        ));
        // constant trace ≡ static detuning
        let tr = FrequencyTrace { dt: 10e-9, values: vec![TAU * 2e6; 10] };
        let a = apply_mw_pulse(&up, 5e6, 0.0, 0.0, 100e-9, Some(&tr)).unwrap();
        let b = apply_mw_pulse(&up, 5e6, 2e6, 0.0, 100e-9, None).unwrap();
        assert!((a.matrix() - b.matrix()).norm() < 1e-12);
    }

    #[test]
    fn two_pi_pulses_identity() {
        let s = 0.6f64;
        let psi = [Complex64::new(s, 0.0), Complex64::new(0.0, (1.0 - s * s).sqrt())];
        let rho = DensityMatrix::pure(&psi).unwrap();
        let a = apply_mw_pulse(&rho, 5e6, 0.0, 0.3, 100e-9, None).unwrap();
        let b = apply_mw_pulse(&a, 5e6, 0.0, 0.3, 100e-9, None).unwrap();
        assert!((b.matrix() - rho.matrix()).norm() < 1e-9);
    }
}
