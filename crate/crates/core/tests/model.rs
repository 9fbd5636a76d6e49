//! Level-structure, rate and jump-process properties over parameter ranges.

use proptest::prelude::*;
use sivsim::config::defaults;
use sivsim::constants::MU_B_HZ_PER_G;
use sivsim::engine::jump::{LB_DOWN, LB_UP};
use sivsim::engine::{jump_trajectory, occupations, LevelGraph, Transition, N_LEVELS};
use sivsim::model::{
    boltzmann_factor, cyclicity, excited_hamiltonian, ground_hamiltonian, is_hermitian, level_diagram, phonon_rates, rate_set, FieldConfig,
    SivParams,
};

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 64,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn hamiltonians_are_hermitian(b in 0.0..1e4f64, alpha in 0.0..90.0f64, sx in 0.0..100e9f64, sy in -50e9..50e9f64) {
        let p = SivParams { strain_x: sx, strain_y: sy, ..SivParams::default() };
        let f = FieldConfig::new(b, alpha).unwrap();
        prop_assert!(is_hermitian(&ground_hamiltonian(&p, &f), 1e-12));
        prop_assert!(is_hermitian(&excited_hamiltonian(&p, &f), 1e-12));
    }

    #[test]
    fn phonon_rates_obey_detailed_balance(delta in 5e9..500e9f64, t in 0.05..20.0f64) {
        let r = phonon_rates(&SivParams::default(), delta, t).unwrap();
        let want = boltzmann_factor(delta, t);
        prop_assert!((r.gamma_plus / r.gamma_minus / want - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_field_splitting_closed_form(lambda in 10e9..100e9f64, sx in 0.0..100e9f64, sy in -50e9..50e9f64) {
        let p = SivParams { lambda_so: lambda, strain_x: sx, strain_y: sy, ..SivParams::default() };
        let d = level_diagram(&p, &FieldConfig::new(0.0, 0.0).unwrap()).unwrap();
        let want = (lambda * lambda + 4.0 * (sx * sx + sy * sy)).sqrt();
        prop_assert!((d.delta_gs / want - 1.0).abs() < 1e-9);
    }

    #[test]
    fn qubit_frequency_is_linear_in_aligned_field(b in 200.0..5000.0f64) {
        // spin-only Zeeman along the axis: exactly linear, slope g·μ_B
        let p = SivParams { q_orbital: 0.0, ..SivParams::default() };
        let aligned = |b: f64| level_diagram(&p, &FieldConfig::new(b, 0.0).unwrap()).unwrap().f_qubit;
        let (f1, f2) = (aligned(b), aligned(2.0 * b));
        prop_assert!(((f2 - f1) / f1 - 1.0).abs() < 1e-6);
        prop_assert!((f1 / b / (p.g_spin * MU_B_HZ_PER_G) - 1.0).abs() < 1e-6);
        // with the default orbital Zeeman term, acting against strain, the
        // line bends slightly
        let p = SivParams::default();
        let aligned = |b: f64| level_diagram(&p, &FieldConfig::new(b, 0.0).unwrap()).unwrap().f_qubit;
        let (f1, f2) = (aligned(b), aligned(2.0 * b));
        prop_assert!(((f2 - f1) / f1 - 1.0).abs() < 1e-4);
    }
}

#[test]
fn cyclicity_falls_with_misalignment() {
    let p = SivParams::default();
    let eta: Vec<f64> = (0..19).map(|i| cyclicity(&p, &FieldConfig::new(2700.0, 5.0 * i as f64).unwrap()).unwrap()).collect();
    assert!(eta.windows(2).all(|w| w[1] <= w[0]), "{eta:?}");
    assert!(eta[0] > 0.999 && eta[18] < 0.9);
}

#[test]
fn trajectories_follow_the_master_equation() {
    // fast pumping geometry: populations move on the 100 ns scale
    let p = SivParams::default();
    let r = rate_set(&p, &FieldConfig::new(2900.0, 88.0).unwrap(), 0.1, 1.0).unwrap();
    let g = LevelGraph::optical(&r, Some(Transition::Down)).unwrap();
    let t_end = 500e-9;
    let n = 10_000;
    let checkpoints: Vec<f64> = (1..=10).map(|k| t_end * k as f64 / 10.0).collect();
    let mut hist = vec![[0usize; N_LEVELS]; checkpoints.len()];
    for seed in 0..n {
        let rec = jump_trajectory(LB_DOWN, &g, t_end, 0.0, seed as u64).unwrap();
        for (c, &t) in checkpoints.iter().enumerate() {
            let jumps = rec.jump_times.iter().take_while(|&&j| j <= t).count();
            hist[c][rec.level_path[jumps]] += 1;
        }
    }
    let mut p0 = [0.0; N_LEVELS];
    p0[LB_DOWN] = 1.0;
    for (c, &t) in checkpoints.iter().enumerate() {
        let want = occupations(&g, &p0, t);
        for l in 0..N_LEVELS {
            let freq = hist[c][l] as f64 / n as f64;
            let sigma = (want[l] * (1.0 - want[l]) / n as f64).sqrt();
            assert!((freq - want[l]).abs() <= 3.0 * sigma + 1e-12, "t={t:e} level {l}: {freq} vs {}", want[l]);
        }
    }
    // the pumped population has moved
    assert!(occupations(&g, &p0, t_end)[LB_UP] > 0.9);
}

#[test]
fn trajectories_are_deterministic() {
    let d = defaults();
    let r = rate_set(&d.system.params, &d.system.field, 0.1, 1.0).unwrap();
    let g = LevelGraph::optical(&r, Some(Transition::Down)).unwrap();
    let a = jump_trajectory(LB_DOWN, &g, 20e-6, 0.01, 42).unwrap();
    let b = jump_trajectory(LB_DOWN, &g, 20e-6, 0.01, 42).unwrap();
    assert_eq!(a, b);
    assert!(a.jump_times.windows(2).all(|w| w[0] < w[1]));
}
