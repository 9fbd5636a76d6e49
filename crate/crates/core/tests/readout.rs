use proptest::prelude::*;
use sivsim::config::defaults;
use sivsim::engine::jump::LB_DOWN;
use sivsim::exec::Executor;
use sivsim::model::{rate_set, RateSet};
use sivsim::readout::{
    build_histograms, optimal_threshold, poisson_fidelity, shelving_diagnostic, simulate_counts, simulate_readout_window, threshold_fidelity,
};

fn brute_force(down: &[u64], up: &[u64], k: u64) -> f64 {
    let right = down.iter().filter(|&&n| n > k).count() + up.iter().filter(|&&n| n <= k).count();
    right as f64 / (down.len() + up.len()) as f64
}

#[test]
fn fidelity_equals_shot_by_shot_classification() {
    let sys = defaults().system.clone();
    let (down, up) = simulate_counts(&sys, 1.0, 0.15, 20e-3, 2000, 5, &Executor::Parallel).unwrap();
    let h = build_histograms(&down, &up, 20e-3).unwrap();
    for k in 0..=h.max_count() + 1 {
        let f = threshold_fidelity(&h, k);
        assert!((f.f_avg - brute_force(&down, &up, k)).abs() < 1e-12, "threshold {k}");
    }
    let mean = |v: &[u64]| v.iter().sum::<u64>() as f64 / v.len() as f64;
    assert!((h.mean_down() - mean(&down)).abs() < 1e-12);
    assert!((h.mean_up() - mean(&up)).abs() < 1e-12);
    let (k, best) = optimal_threshold(&h);
    assert!((0..=h.max_count()).all(|j| threshold_fidelity(&h, j).f_avg <= best));
    assert!(threshold_fidelity(&h, k).f_avg == best);
}

#[test]
fn histograms_reject_bad_input() {
    assert!(build_histograms(&[], &[], 1.0).is_err());
    assert!(build_histograms(&[1, 2], &[0], 1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn fidelities_are_monotone_in_threshold(
        down in prop::collection::vec(0u64..30, 1..200),
        up_seed in prop::collection::vec(0u64..30, 200),
    ) {
        let up = &up_seed[..down.len()];
        let h = build_histograms(&down, up, 1e-3).unwrap();
        let mut prev = threshold_fidelity(&h, 0);
        for k in 1..=h.max_count() + 1 {
            let f = threshold_fidelity(&h, k);
            prop_assert!(f.f_up >= prev.f_up && f.f_down <= prev.f_down);
            prop_assert!((f.f_avg - brute_force(&down, up, k)).abs() < 1e-12);
            prev = f;
        }
        prop_assert_eq!((prev.f_down, prev.f_up), (0.0, 1.0));
    }
}

/// Readout rates with every spin-flip channel closed: spin-flipping optical
/// decay folded into the spin-conserving one, no T₁.
fn no_spin_flips() -> RateSet {
    let sys = defaults().system.clone();
    let mut r = rate_set(&sys.params, &sys.field, sys.temperature, 1.0).unwrap();
    r.gamma_par += r.gamma_perp;
    r.gamma_perp = 0.0;
    r.eta_down = 1.0;
    r.eta_up = 1.0;
    r.t1_down = 0.0;
    r.t1_up = 0.0;
    r
}

/// Upper 1% point of χ²(dof), Wilson–Hilferty approximation.
fn chi2_crit_1pct(dof: f64) -> f64 {
    let z = 2.326_347_874;
    let a = 2.0 / (9.0 * dof);
    dof * (1.0 - a + z * a.sqrt()).powi(3)
}

#[test]
fn without_spin_flips_counts_are_poisson() {
    let r = no_spin_flips();
    let eta = defaults().system.params.eta_collect;
    let window = 20e-3;
    let n = 10_000;
    let counts: Vec<u64> = Executor::Parallel.map(n, |s| simulate_readout_window(LB_DOWN, &r, window, eta, s as u64).unwrap());
    // the master-equation photon number is the Poisson mean
    let mu = shelving_diagnostic(&r, window, eta).unwrap().photons;
    let mean = counts.iter().sum::<u64>() as f64 / n as f64;
    println!("mean {mean:.4}, oracle {mu:.4}");
    assert!((mean / mu - 1.0).abs() < 0.02);

    // bins with ≥ 5 expected counts, tails merged into the end bins
    let pmf = |k: u64| (-mu + k as f64 * mu.ln() - (1..=k).map(|i| (i as f64).ln()).sum::<f64>()).exp();
    let mut lo = 0;
    while n as f64 * (0..=lo).map(pmf).sum::<f64>() < 5.0 {
        lo += 1;
    }
    let mut hi = lo + 1;
    while n as f64 * pmf(hi + 1) >= 5.0 {
        hi += 1;
    }
    let mut chi2 = 0.0;
    for k in lo..=hi {
        let p = if k == lo {
            (0..=lo).map(pmf).sum()
        } else if k == hi {
            1.0 - (0..hi).map(pmf).sum::<f64>()
        } else {
            pmf(k)
        };
        let obs = counts
            .iter()
            .filter(|&&c| if k == lo { c <= lo } else if k == hi { c >= hi } else { c == k })
            .count() as f64;
        let e = n as f64 * p;
        chi2 += (obs - e).powi(2) / e;
    }
    let dof = (hi - lo) as f64;
    println!("chi2 {chi2:.2} on {dof} dof, 1% critical {:.2}", chi2_crit_1pct(dof));
    assert!(chi2 < chi2_crit_1pct(dof));
}

#[test]
fn poisson_control_exceeds_full_dynamics() {
    // spin flips during readout are what pull the fidelity below the
    // Poisson value for the same means
    let sys = defaults().system.clone();
    let (down, up) = simulate_counts(&sys, 1.0, 0.15, 20e-3, 3000, 9, &Executor::Parallel).unwrap();
    let h = build_histograms(&down, &up, 20e-3).unwrap();
    let full = threshold_fidelity(&h, 1).f_avg;
    let control = poisson_fidelity(h.mean_down(), h.mean_up(), 1).f_avg;
    assert!(control > full + 0.02, "{control} vs {full}");
    assert!((poisson_fidelity(6.2, 0.52, 1).f_avg - 0.944).abs() < 1e-3);
}

#[test]
fn worker_count_does_not_change_counts() {
    let sys = defaults().system.clone();
    let a = simulate_counts(&sys, 1.0, 0.1, 5e-3, 200, 3, &Executor::Sequential).unwrap();
    let b = simulate_counts(&sys, 1.0, 0.1, 5e-3, 200, 3, &Executor::Workers(3)).unwrap();
    assert_eq!(a, b);
}
