use super::density::{CMatrix, DensityMatrix};
use crate::constants::TAU;
use crate::error::{Result, SimError};
use num_complex::Complex64;

/// Dissipator term `rate·(L ρ L† − ½{L†L, ρ})`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpOperator {
    pub matrix: CMatrix,
    /// s⁻¹.
    pub rate: f64,
    pub name: String,
}

impl JumpOperator {
    pub fn new(name: impl Into<String>, matrix: CMatrix, rate: f64) -> Result<Self> {
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(SimError::param("rate", format!("jump rate must be non-negative, got {rate}")));
        }
        Ok(Self {
            matrix,
            rate,
            name: name.into(),
        })
    }
}

/// Largest allowed `dt × (generator scale)` for the RK4 stepper.
pub const STEP_LIMIT: f64 = 0.05;

fn spectral_spread(h: &CMatrix) -> f64 {
    let e = h.clone().symmetric_eigen().eigenvalues;
    let (lo, hi) = e.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    hi - lo
}

fn spectral_norm_sq(l: &CMatrix) -> f64 {
    let g = l.adjoint() * l;
    g.symmetric_eigen().eigenvalues.iter().cloned().fold(0.0, f64::max)
}

/// Precomputed Lindblad generator pieces for a fixed (H, jumps).
struct Generator {
    /// −i·2π·H, so that dρ/dt ⊃ Aρ + ρA†.
    a: CMatrix,
    ls: Vec<(CMatrix, CMatrix)>,
}

impl Generator {
    fn new(h: &CMatrix, jumps: &[JumpOperator]) -> Self {
        let n = h.nrows();
        let mut a = h * Complex64::new(0.0, -TAU);
        let mut ls = Vec::new();
        for j in jumps.iter().filter(|j| j.rate > 0.0) {
            let s = Complex64::new(j.rate.sqrt(), 0.0);
            let l = &j.matrix * s;
            let ld = l.adjoint();
            a -= (&ld * &l) * Complex64::new(0.5, 0.0);
            ls.push((l, ld));
        }
        debug_assert_eq!(a.nrows(), n);
        Self { a, ls }
    }

    fn apply(&self, rho: &CMatrix) -> CMatrix {
        let ar = &self.a * rho;
        let mut out = &ar + ar.adjoint();
        for (l, ld) in &self.ls {
            out += l * rho * ld;
        }
        out
    }
}

fn check_dims(rho: &DensityMatrix, h: &CMatrix, jumps: &[JumpOperator]) -> Result<()> {
    let d = rho.dim();
    if h.nrows() != d || h.ncols() != d {
        return Err(SimError::DimensionMismatch { expected: d, got: h.nrows() });
    }
    for j in jumps {
        if j.matrix.nrows() != d || j.matrix.ncols() != d {
            return Err(SimError::DimensionMismatch {
                expected: d,
                got: j.matrix.nrows(),
            });
        }
    }
    Ok(())
}

/// Checks the stiffness precondition, naming the dominant term on failure.
fn check_step(h: &CMatrix, jumps: &[JumpOperator], dt: f64) -> Result<()> {
    let mut worst = ("hamiltonian".to_string(), TAU * spectral_spread(h));
    for j in jumps {
        let s = j.rate * spectral_norm_sq(&j.matrix);
        if s > worst.1 {
            worst = (j.name.clone(), s);
        }
    }
    let product = dt * worst.1;
    if product > STEP_LIMIT {
        return Err(SimError::StepTooLarge {
            rate_name: worst.0,
            product,
            limit: STEP_LIMIT,
        });
    }
    Ok(())
}

/// Largest step satisfying the RK4 precondition for (H, jumps).
pub fn max_step(h: &CMatrix, jumps: &[JumpOperator]) -> f64 {
    let mut scale = TAU * spectral_spread(h);
    for j in jumps {
        scale = scale.max(j.rate * spectral_norm_sq(&j.matrix));
    }
    if scale > 0.0 {
        STEP_LIMIT / scale
    } else {
        f64::INFINITY
    }
}

/// Integrates the Lindblad equation with fixed-step RK4.
///
/// `h` is in Hz (cyclic frequency); the step actually used is
/// `duration / ceil(duration / dt)` so the segment ends exactly on time.
pub fn evolve(rho: &DensityMatrix, h: &CMatrix, jumps: &[JumpOperator], duration: f64, dt: f64) -> Result<DensityMatrix> {
    check_dims(rho, h, jumps)?;
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(SimError::param("duration", format!("must be non-negative, got {duration}")));
    }
    if duration == 0.0 {
        return Ok(rho.clone());
    }
    if !(dt > 0.0) || dt > duration * (1.0 + 1e-12) {
        return Err(SimError::param("dt", format!("must lie in (0, duration], got {dt}")));
    }
    check_step(h, jumps, dt)?;
    let steps = (duration / dt - 1e-9).ceil().max(1.0) as usize;
    let step = duration / steps as f64;
    let g = Generator::new(h, jumps);
    let c = |x: f64| Complex64::new(x, 0.0);

    let mut r = rho.matrix().clone();
    for _ in 0..steps {
        let k1 = g.apply(&r);
        let k2 = g.apply(&(&r + &k1 * c(0.5 * step)));
        let k3 = g.apply(&(&r + &k2 * c(0.5 * step)));
        let k4 = g.apply(&(&r + &k3 * c(step)));
        r += (k1 + k2 * c(2.0) + k3 * c(2.0) + k4) * c(step / 6.0);
    }
    let mut out = DensityMatrix::from_raw(r);
    out.symmetrize();
    Ok(out)
}

/// exp(−i·2π·H·t) for Hermitian `h` in Hz.
pub fn unitary(h: &CMatrix, t: f64) -> CMatrix {
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let n = h.nrows();
    let phases = CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::from_polar(1.0, -TAU * eig.eigenvalues[i] * t)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    v * phases * v.adjoint()
}

#[cfg(test)]
mod tests {
    use super::super::density::pauli;
    use super::*;

    fn plus() -> DensityMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        DensityMatrix::pure(&[Complex64::new(s, 0.0), Complex64::new(s, 0.0)]).unwrap()
    }

    #[test]
    fn identity_evolution() {
        let rho = plus();
        let out = evolve(&rho, &CMatrix::zeros(2, 2), &[], 1e-6, 1e-7).unwrap();
        assert!((out.matrix() - rho.matrix()).norm() < 1e-15);
    }

    #[test]
    fn pure_dephasing_closed_form() {
        // L = sqrt(γ/2)·σz gives coherence decay e^{−γt}
        let gamma = 1e5;
        let jump = JumpOperator::new("dephasing", pauli::z(), gamma / 2.0).unwrap();
        for &gt in &[0.5, 1.0, 2.0] {
            let t = gt / gamma;
            let out = evolve(&plus(), &CMatrix::zeros(2, 2), &[jump.clone()], t, t / 200.0).unwrap();
            let c = out.coherence(0, 1).norm();
            assert!((c - 0.5 * (-gt as f64).exp()).abs() < 1e-4, "{c}");
            out.check().unwrap();
        }
    }

    #[test]
    fn amplitude_damping_closed_form() {
        let gamma = 2e4;
        let jump = JumpOperator::new("t1", pauli::lower(), gamma).unwrap();
        let up = DensityMatrix::basis(2, 0).unwrap();
        for &gt in &[0.5, 1.0, 2.0] {
            let t = gt / gamma;
            let out = evolve(&up, &CMatrix::zeros(2, 2), &[jump.clone()], t, t / 100.0).unwrap();
            assert!((out.population(0) - (-gt as f64).exp()).abs() < 1e-4);
            assert!((out.trace() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn step_precondition_names_rate() {
        let jump = JumpOperator::new("fast_decay", pauli::lower(), 1e9).unwrap();
        let err = evolve(&plus(), &CMatrix::zeros(2, 2), &[jump], 1e-6, 1e-7).unwrap_err();
        match err {
            SimError::StepTooLarge { rate_name, .. } => assert_eq!(rate_name, "fast_decay"),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn rk4_matches_unitary() {
        let h = pauli::x() * Complex64::new(2.5e6, 0.0);
        let up = DensityMatrix::basis(2, 0).unwrap();
        let t = 73e-9;
        let exact = up.transformed(&unitary(&h, t)).unwrap();
        let rk = evolve(&up, &h, &[], t, max_step(&h, &[])).unwrap();
        assert!((exact.matrix() - rk.matrix()).norm() < 1e-6);
    }
}
