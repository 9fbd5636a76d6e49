use super::hamiltonian::{excited_hamiltonian, ground_hamiltonian, Matrix4c};
use super::params::{FieldConfig, SivParams};
use crate::error::Result;
use nalgebra::{Matrix2, Vector4};
use num_complex::Complex64;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Spin {
    Up,
    Down,
}

/// One eigenstate of a 4×4 branch Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    /// Energy in Hz.
    pub energy: f64,
    /// Amplitudes in the `{e₊, e₋} ⊗ {↑, ↓}` basis; the largest-magnitude
    /// component is real and positive.
    pub vector: Vector4<Complex64>,
    pub spin: Spin,
    /// ⟨σ·b̂⟩ along the field direction (along z at zero field).
    pub spin_projection: f64,
}

/// Eigen-structure of the ground manifold plus the lower excited doublet.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelDiagram {
    /// Ground levels, energies ascending: LB pair then UB pair.
    pub ground_levels: [Level; 4],
    /// Lower excited doublet LB′, energies ascending.
    pub excited_levels: [Level; 2],
    pub delta_gs: f64,
    pub f_qubit: f64,
    /// Optical transition frequencies LB↓→LB′↓ and LB↑→LB′↑, relative to
    /// the zero-field LB→LB′ line.
    pub f_down: f64,
    pub f_up: f64,
    /// Spin-flip weight of the ↓′ decay, `1 − eta_down`.
    pub spin_overlap: f64,
    /// Spin-conserving fraction of optical decays from ↓′ and from ↑′.
    pub eta_down: f64,
    pub eta_up: f64,
    /// Indices into `ground_levels`.
    pub lb_down: usize,
    pub lb_up: usize,
    pub ub_down: usize,
    pub ub_up: usize,
    /// Indices into `excited_levels`.
    pub es_down: usize,
    pub es_up: usize,
}

impl LevelDiagram {
    pub fn lb(&self, spin: Spin) -> &Level {
        &self.ground_levels[match spin {
            Spin::Down => self.lb_down,
            Spin::Up => self.lb_up,
        }]
    }

    pub fn es(&self, spin: Spin) -> &Level {
        &self.excited_levels[match spin {
            Spin::Down => self.es_down,
            Spin::Up => self.es_up,
        }]
    }
}

/// Spin operator σ·b̂ for a field in the x–z plane.
fn spin_along_field(field: &FieldConfig) -> Matrix4c {
    let (sa, ca) = if field.b_mag > 0.0 {
        let a = field.alpha.to_radians();
        (a.sin(), a.cos())
    } else {
        (0.0, 1.0)
    };
    let mut m = Matrix4c::zeros();
    for orb in 0..2 {
        let (u, d) = (2 * orb, 2 * orb + 1);
        m[(u, u)] = Complex64::new(ca, 0.0);
        m[(d, d)] = Complex64::new(-ca, 0.0);
        m[(u, d)] = Complex64::new(sa, 0.0);
        m[(d, u)] = Complex64::new(sa, 0.0);
    }
    m
}

fn spin_z() -> Matrix4c {
    Matrix4c::from_diagonal(&Vector4::new(1.0, -1.0, 1.0, -1.0).map(|v| Complex64::new(v, 0.0)))
}

fn expect(v: &Vector4<Complex64>, op: &Matrix4c) -> f64 {
    v.dotc(&(op * v)).re
}

fn fix_phase(v: &mut Vector4<Complex64>) {
    let mut best = 0;
    for i in 1..4 {
        // strict improvement beyond rounding keeps ties on the lowest index
        if v[i].norm() > v[best].norm() * (1.0 + 1e-12) {
            best = i;
        }
    }
    let p = v[best];
    if p.norm() > 0.0 {
        let rot = p.conj() / p.norm();
        *v *= rot;
        v[best] = Complex64::new(v[best].re, 0.0);
    }
}

/// Sorted eigenpairs with a deterministic basis inside degenerate pairs.
fn eigen_levels(h: &Matrix4c, s_field: &Matrix4c) -> [Level; 4] {
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let mut e: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut v: Vec<Vector4<Complex64>> = order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();

    let scale = e.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
    let sz = spin_z();
    for k in [0usize, 2] {
        if (e[k + 1] - e[k]).abs() > 1e-9 * scale {
            continue;
        }
        // Degenerate pair: pick the combinations that diagonalise σ·b̂ (σ_z at B = 0)
        let mut op = *s_field;
        for _ in 0..2 {
            let m = Matrix2::from_fn(|r, c| v[k + r].dotc(&(op * v[k + c])));
            let sub = m.symmetric_eigen();
            if (sub.eigenvalues[0] - sub.eigenvalues[1]).abs() > 1e-9 {
                let (lo, hi) = if sub.eigenvalues[0] < sub.eigenvalues[1] { (0, 1) } else { (1, 0) };
                let combo = |j: usize| v[k] * sub.eigenvectors[(0, j)] + v[k + 1] * sub.eigenvectors[(1, j)];
                let (a, b) = (combo(lo), combo(hi));
                v[k] = a;
                v[k + 1] = b;
                break;
            }
            op = sz;
        }
        let mean = 0.5 * (e[k] + e[k + 1]);
        e[k] = mean;
        e[k + 1] = mean;
    }

    let mk = |i: usize| {
        let mut vec = v[i];
        vec.normalize_mut();
        fix_phase(&mut vec);
        Level {
            energy: e[i],
            spin_projection: expect(&vec, s_field),
            vector: vec,
            spin: Spin::Down,
        }
    };
    let mut levels = [mk(0), mk(1), mk(2), mk(3)];
    for k in [0usize, 2] {
        let (up, down) = spin_order(&levels[k], &levels[k + 1], &sz);
        levels[k + up].spin = Spin::Up;
        levels[k + down].spin = Spin::Down;
    }
    levels
}

/// Returns (offset of ↑, offset of ↓) inside a pair.
fn spin_order(a: &Level, b: &Level, sz: &Matrix4c) -> (usize, usize) {
    let d = b.spin_projection - a.spin_projection;
    if d.abs() > 1e-12 {
        return if d > 0.0 { (1, 0) } else { (0, 1) };
    }
    let dz = expect(&b.vector, sz) - expect(&a.vector, sz);
    if dz > 1e-12 {
        (1, 0)
    } else {
        // equal projections: the lower index is ↓
        (if dz < -1e-12 { 0 } else { 1 }, if dz < -1e-12 { 1 } else { 0 })
    }
}

/// Reduced spin density matrix (orbital traced out).
fn spin_density(v: &Vector4<Complex64>) -> Matrix2<Complex64> {
    Matrix2::from_fn(|s, t| (0..2).map(|o| v[2 * o + s] * v[2 * o + t].conj()).sum())
}

/// Branching weight Tr(ρ_e ρ_g) between the spin parts of two states.
fn spin_weight(a: &Vector4<Complex64>, b: &Vector4<Complex64>) -> f64 {
    (spin_density(a) * spin_density(b)).trace().re.max(0.0)
}

pub fn level_diagram(params: &SivParams, field: &FieldConfig) -> Result<LevelDiagram> {
    params.validate()?;
    field.validate()?;
    let s_field = spin_along_field(field);
    let ground = eigen_levels(&ground_hamiltonian(params, field), &s_field);
    let ex_all = eigen_levels(&excited_hamiltonian(params, field), &s_field);
    let excited = [ex_all[0].clone(), ex_all[1].clone()];

    let find = |ls: &[Level], base: usize, spin: Spin| base + (0..2).find(|&i| ls[base + i].spin == spin).unwrap_or(0);
    let lb_down = find(&ground, 0, Spin::Down);
    let lb_up = find(&ground, 0, Spin::Up);
    let ub_down = find(&ground, 2, Spin::Down);
    let ub_up = find(&ground, 2, Spin::Up);
    let es_down = find(&excited, 0, Spin::Down);
    let es_up = find(&excited, 0, Spin::Up);

    let delta_gs = 0.5 * (ground[2].energy + ground[3].energy) - 0.5 * (ground[0].energy + ground[1].energy);
    let f_qubit = (ground[lb_up].energy - ground[lb_down].energy).abs();
    let g0 = -0.5 * params.delta_gs_zero_field();
    let e0 = -0.5 * params.delta_es_zero_field();
    let f_down = (excited[es_down].energy - e0) - (ground[lb_down].energy - g0);
    let f_up = (excited[es_up].energy - e0) - (ground[lb_up].energy - g0);

    let eta = |e: &Level, same: &Level, other: &Level| {
        let ws = spin_weight(&e.vector, &same.vector);
        let wo = spin_weight(&e.vector, &other.vector);
        if ws + wo > 0.0 {
            ws / (ws + wo)
        } else {
            1.0
        }
    };
    let eta_down = eta(&excited[es_down], &ground[lb_down], &ground[lb_up]);
    let eta_up = eta(&excited[es_up], &ground[lb_up], &ground[lb_down]);

    Ok(LevelDiagram {
        ground_levels: ground,
        excited_levels: excited,
        delta_gs,
        f_qubit,
        f_down,
        f_up,
        spin_overlap: 1.0 - eta_down,
        eta_down,
        eta_up,
        lb_down,
        lb_up,
        ub_down,
        ub_up,
        es_down,
        es_up,
    })
}

/// Spin-conserving fraction γ∥/(γ∥ + γ⊥) of decays from LB′↓.
pub fn cyclicity(params: &SivParams, field: &FieldConfig) -> Result<f64> {
    Ok(level_diagram(params, field)?.eta_down)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::MU_B_HZ_PER_G;

    fn unstrained() -> SivParams {
        SivParams {
            lambda_so: 46e9,
            strain_x: 0.0,
            strain_y: 0.0,
            strain_excited: 0.0,
            ..SivParams::default()
        }
    }

    #[test]
    fn zero_field_doublets() {
        let d = level_diagram(&unstrained(), &FieldConfig::new(0.0, 0.0).unwrap()).unwrap();
        assert!(d.f_qubit.abs() < 1e-3);
        assert!((d.delta_gs - 46e9).abs() < 1e-3);
        assert!(d.f_down.abs() < 1.0 && d.f_up.abs() < 1.0);
        // zero-field levels are still assigned definite spins
        assert_ne!(d.lb_down, d.lb_up);
    }

    #[test]
    fn aligned_unstrained_is_cyclic() {
        let d = level_diagram(&unstrained(), &FieldConfig::new(2700.0, 0.0).unwrap()).unwrap();
        assert!(d.spin_overlap.abs() < 1e-15);
        assert_eq!(d.eta_down, 1.0);
    }

    #[test]
    fn qubit_splitting_without_orbital_zeeman() {
        let p = SivParams {
            q_orbital: 0.0,
            g_spin: 2.0,
            ..SivParams::default()
        };
        let d = level_diagram(&p, &FieldConfig::new(2700.0, 0.0).unwrap()).unwrap();
        let expected = 2.0 * MU_B_HZ_PER_G * 2700.0;
        assert!((d.f_qubit - expected).abs() < 1e-9 * expected);
        assert!((d.f_qubit - 7.558e9).abs() < 1e6);
    }

    #[test]
    fn lower_lb_level_is_down() {
        let d = level_diagram(&SivParams::default(), &FieldConfig::new(1000.0, 30.0).unwrap()).unwrap();
        assert!(d.ground_levels[d.lb_down].energy < d.ground_levels[d.lb_up].energy);
        assert!(d.lb_down < 2 && d.lb_up < 2 && d.ub_down >= 2 && d.ub_up >= 2);
    }

    #[test]
    fn phase_convention() {
        let d = level_diagram(&SivParams::default(), &FieldConfig::new(1700.0, 45.0).unwrap()).unwrap();
        for l in d.ground_levels.iter().chain(d.excited_levels.iter()) {
            let (i, m) = l
                .vector
                .iter()
                .enumerate()
                .fold((0, 0.0), |(bi, bm), (i, c)| if c.norm() > bm * (1.0 + 1e-12) { (i, c.norm()) } else { (bi, bm) });
            assert!(l.vector[i].im == 0.0 && l.vector[i].re > 0.0 && (l.vector[i].re - m).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic() {
        let p = SivParams::default();
        let f = FieldConfig::new(2900.0, 88.0).unwrap();
        assert_eq!(level_diagram(&p, &f).unwrap(), level_diagram(&p, &f).unwrap());
    }
}
