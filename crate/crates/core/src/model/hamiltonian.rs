use super::params::{FieldConfig, SivParams};
use crate::constants::MU_B_HZ_PER_G;
use nalgebra::Matrix4;
use num_complex::Complex64;

pub type Matrix4c = Matrix4<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

fn pauli() -> [[Complex64; 4]; 4] {
    // identity, x, y, z as row-major 2×2 blocks
    [
        [ONE, ZERO, ZERO, ONE],
        [ZERO, ONE, ONE, ZERO],
        [ZERO, -I, I, ZERO],
        [ONE, ZERO, ZERO, -ONE],
    ]
}

/// Kronecker product `orbital ⊗ spin` of two Pauli operators (0 = identity).
fn kron(orb: usize, spin: usize) -> Matrix4c {
    let p = pauli();
    let (a, b) = (p[orb], p[spin]);
    Matrix4c::from_fn(|r, c| a[(r / 2) * 2 + c / 2] * b[(r % 2) * 2 + c % 2])
}

/// Generic form shared by the ground and excited manifolds.
fn branch_hamiltonian(lambda: f64, ups_x: f64, ups_y: f64, q: f64, g: f64, field: &FieldConfig) -> Matrix4c {
    let (bx, bz) = field.components();
    let c = |v: f64| Complex64::new(v, 0.0);
    kron(3, 3) * c(lambda / 2.0)
        + kron(1, 0) * c(ups_x)
        + kron(2, 0) * c(ups_y)
        + kron(3, 0) * c(q * MU_B_HZ_PER_G * bz)
        + kron(0, 1) * c(0.5 * g * MU_B_HZ_PER_G * bx)
        + kron(0, 3) * c(0.5 * g * MU_B_HZ_PER_G * bz)
}

/// Ground-state Hamiltonian in Hz, basis `{e₊, e₋} ⊗ {↑, ↓}` (index = 2·orbital + spin).
///
/// Spin-orbit `(λ/2)·L_z σ_z`, transverse strain on the orbital doublet,
/// orbital Zeeman `q μ_B B_z L_z` and spin Zeeman `(g/2) μ_B B·σ`, with the
/// field in the x–z plane at angle α from the symmetry axis.
pub fn ground_hamiltonian(params: &SivParams, field: &FieldConfig) -> Matrix4c {
    branch_hamiltonian(
        params.lambda_so,
        params.strain_x,
        params.strain_y,
        params.q_orbital,
        params.g_spin,
        field,
    )
}

/// Optically excited manifold, same form with excited-state parameters.
pub fn excited_hamiltonian(params: &SivParams, field: &FieldConfig) -> Matrix4c {
    branch_hamiltonian(
        params.lambda_so_excited,
        params.strain_excited,
        0.0,
        params.q_orbital_excited,
        params.g_spin,
        field,
    )
}

/// `‖H − H†‖ ≤ tol·‖H‖` in the Frobenius norm.
pub fn is_hermitian(h: &Matrix4c, tol: f64) -> bool {
    (h - h.adjoint()).norm() <= tol * h.norm().max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> SivParams {
        SivParams {
            lambda_so: 46e9,
            strain_x: 32.7e9,
            strain_y: 5e9,
            ..SivParams::default()
        }
    }

    #[test]
    fn hermitian_for_all_angles() {
        let p = params();
        for a in 0..=18 {
            let f = FieldConfig::new(3000.0, a as f64 * 5.0).unwrap();
            assert!(is_hermitian(&ground_hamiltonian(&p, &f), 1e-12));
            assert!(is_hermitian(&excited_hamiltonian(&p, &f), 1e-12));
        }
    }

    #[test]
    fn kron_layout() {
        // σz ⊗ I is diag(1, 1, −1, −1); I ⊗ σz is diag(1, −1, 1, −1).
        let oz = kron(3, 0);
        let sz = kron(0, 3);
        for i in 0..4 {
            assert_eq!(oz[(i, i)].re, if i < 2 { 1.0 } else { -1.0 });
            assert_eq!(sz[(i, i)].re, if i % 2 == 0 { 1.0 } else { -1.0 });
        }
        // I ⊗ σx couples spin partners inside an orbital
        let sx = kron(0, 1);
        assert_eq!(sx[(0, 1)], ONE);
        assert_eq!(sx[(0, 2)], ZERO);
    }
}
