use crate::error::{Result, SimError};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// Mixed state of a 2–6 dimensional system.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: CMatrix,
}

/// Tolerances used by [`DensityMatrix::check`].
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-9;
pub const POSITIVITY_TOL: f64 = 1e-9;

impl DensityMatrix {
    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        let dim = m.nrows();
        if m.ncols() != dim {
            return Err(SimError::DimensionMismatch { expected: dim, got: m.ncols() });
        }
        if !(2..=6).contains(&dim) {
            return Err(SimError::param("dim", format!("density matrices must be 2–6 dimensional, got {dim}")));
        }
        Ok(Self { m })
    }

    /// |ψ⟩⟨ψ| for a (not necessarily normalised) state vector.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let v = DVector::from_column_slice(psi);
        let n = v.norm();
        if n == 0.0 {
            return Err(SimError::param("psi", "zero vector"));
        }
        let v = v / Complex64::new(n, 0.0);
        Self::from_matrix(&v * v.adjoint())
    }

    /// Basis state `index` of a `dim`-level system.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(SimError::UnknownLevel { index, levels: dim });
        }
        let mut m = CMatrix::zeros(dim, dim);
        m[(index, index)] = Complex64::new(1.0, 0.0);
        Self::from_matrix(m)
    }

    /// Diagonal state with the given populations (normalised).
    pub fn diagonal(populations: &[f64]) -> Result<Self> {
        let total: f64 = populations.iter().sum();
        if !(total > 0.0) || populations.iter().any(|p| *p < 0.0) {
            return Err(SimError::param("populations", "must be non-negative with positive sum"));
        }
        let d = DVector::from_iterator(populations.len(), populations.iter().map(|p| Complex64::new(p / total, 0.0)));
        Self::from_matrix(CMatrix::from_diagonal(&d))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub(crate) fn from_raw(m: CMatrix) -> Self {
        Self { m }
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    pub fn population(&self, i: usize) -> f64 {
        self.m[(i, i)].re
    }

    pub fn coherence(&self, i: usize, j: usize) -> Complex64 {
        self.m[(i, j)]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.m + self.m.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigen().eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.m - self.m.adjoint()).norm()
    }

    /// Validates Hermiticity, unit trace and positivity.
    pub fn check(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > HERMITIAN_TOL {
            return Err(SimError::param("rho", format!("not Hermitian (‖ρ−ρ†‖ = {herm:.2e})")));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(SimError::param("rho", format!("trace {tr} deviates from 1")));
        }
        let min = self.min_eigenvalue();
        if min < -POSITIVITY_TOL {
            return Err(SimError::param("rho", format!("negative eigenvalue {min:.2e}")));
        }
        Ok(())
    }

    /// Replaces ρ by (ρ + ρ†)/2 to remove rounding drift.
    pub fn symmetrize(&mut self) {
        self.m = (&self.m + self.m.adjoint()) * Complex64::new(0.5, 0.0);
    }

    /// U ρ U†.
    pub fn transformed(&self, u: &CMatrix) -> Result<Self> {
        if u.nrows() != self.dim() || u.ncols() != self.dim() {
            return Err(SimError::DimensionMismatch { expected: self.dim(), got: u.nrows() });
        }
        Ok(Self { m: u * &self.m * u.adjoint() })
    }

    /// Partial trace over the second factor of a `dim_a ⊗ dim_b` system.
    pub fn partial_trace_second(&self, dim_a: usize) -> Result<Self> {
        let dim = self.dim();
        if dim % dim_a != 0 {
            return Err(SimError::DimensionMismatch { expected: dim_a, got: dim });
        }
        let db = dim / dim_a;
        if db == 1 {
            return Ok(self.clone());
        }
        let m = CMatrix::from_fn(dim_a, dim_a, |i, j| (0..db).map(|k| self.m[(i * db + k, j * db + k)]).sum());
        Ok(Self { m })
    }
}

/// Tr(ρ·O); the imaginary part is discarded after symmetrisation.
pub fn expectation(rho: &DensityMatrix, observable: &CMatrix) -> Result<f64> {
    if observable.nrows() != rho.dim() || observable.ncols() != rho.dim() {
        return Err(SimError::DimensionMismatch {
            expected: rho.dim(),
            got: observable.nrows(),
        });
    }
    let n = rho.dim();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            // Re Tr(ρO) written out avoids forming the product.
            acc += (rho.m[(i, j)] * observable[(j, i)]).re;
        }
    }
    Ok(acc)
}

/// Pauli matrices for a qubit in the (↑, ↓) basis, ↑ = +1 eigenstate of σ_z.
pub mod pauli {
    use super::CMatrix;
    use num_complex::Complex64;

    fn m(a: [[Complex64; 2]; 2]) -> CMatrix {
        CMatrix::from_fn(2, 2, |i, j| a[i][j])
    }

    const O: Complex64 = Complex64::new(0.0, 0.0);
    const R: Complex64 = Complex64::new(1.0, 0.0);
    const I: Complex64 = Complex64::new(0.0, 1.0);

    pub fn identity() -> CMatrix {
        m([[R, O], [O, R]])
    }
    pub fn x() -> CMatrix {
        m([[O, R], [R, O]])
    }
    pub fn y() -> CMatrix {
        m([[O, -I], [I, O]])
    }
    pub fn z() -> CMatrix {
        m([[R, O], [O, -R]])
    }
    /// σ₋ = |↓⟩⟨↑|.
    pub fn lower() -> CMatrix {
        m([[O, O], [R, O]])
    }
    /// σ₊ = |↑⟩⟨↓|.
    pub fn raise() -> CMatrix {
        m([[O, R], [O, O]])
    }
}
