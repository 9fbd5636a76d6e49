//! Log-linear fits: power laws and Boltzmann ratios. Both reduce to a
//! weighted straight line, solved in closed form.

use super::{check_increasing, weights, FitResult, SIGMA_FLOOR};
use crate::constants::H_OVER_KB;
use crate::error::{Result, SimError};

struct Line {
    intercept: f64,
    slope: f64,
    /// Var(intercept), Var(slope), before any χ² rescaling.
    var: (f64, f64),
    chi2: f64,
}

/// Weighted least squares for v = a + b·u. `None` when the design is singular.
fn weighted_line(u: &[f64], v: &[f64], w: &[f64]) -> Option<Line> {
    let (mut s, mut su, mut sv) = (0.0, 0.0, 0.0);
    for i in 0..u.len() {
        s += w[i];
        su += w[i] * u[i];
        sv += w[i] * v[i];
    }
    let (um, vm) = (su / s, sv / s);
    // centred sums keep the normal equations well conditioned
    let (mut suu, mut suv) = (0.0, 0.0);
    for i in 0..u.len() {
        let du = u[i] - um;
        suu += w[i] * du * du;
        suv += w[i] * du * (v[i] - vm);
    }
    if !(suu > 1e-14 * s * (um * um).max(1e-300)) || suu == 0.0 {
        return None;
    }
    let slope = suv / suu;
    let intercept = vm - slope * um;
    let chi2 = (0..u.len()).map(|i| w[i] * (v[i] - intercept - slope * u[i]).powi(2)).sum();
    Some(Line {
        intercept,
        slope,
        var: (1.0 / s + um * um / suu, 1.0 / suu),
        chi2,
    })
}

/// Converts a line fit into a result with parameters derived from
/// (intercept, slope) together with their derivatives.
fn line_result(
    names: [&'static str; 2],
    u: &[f64],
    v: &[f64],
    w: &[f64],
    have_errors: bool,
    map: impl Fn(f64, f64) -> ([f64; 2], [f64; 2]),
) -> FitResult {
    let Some(l) = weighted_line(u, v, w) else {
        return FitResult::failed(names.to_vec(), "abscissae do not vary: slope is not identifiable");
    };
    let n = u.len();
    let scale = if have_errors {
        1.0
    } else if n > 2 {
        l.chi2 / (n - 2) as f64
    } else {
        f64::NAN
    };
    let (p, d) = map(l.intercept, l.slope);
    let mut r = FitResult {
        names: names.to_vec(),
        params: p.to_vec(),
        sigmas: vec![d[0].abs() * (l.var.0 * scale).sqrt(), d[1].abs() * (l.var.1 * scale).sqrt()],
        residual_rms: (l.chi2 / n as f64).sqrt(),
        converged: true,
        n_iter: 1,
        message: None,
    };
    if r.sigmas.iter().any(|s| s.is_nan()) {
        r.reject("no degrees of freedom left to estimate uncertainties");
    }
    if r.params.iter().any(|v| !v.is_finite()) {
        r.reject("non-finite parameters");
    }
    r
}

/// Log-space weights: σ_ln y = σ_y / y.
fn log_weights(y: &[f64], w: &[f64], have_errors: bool) -> Vec<f64> {
    if !have_errors {
        return w.to_vec();
    }
    y.iter()
        .zip(w)
        .map(|(y, w)| {
            let s = (1.0 / w.sqrt()) / y;
            1.0 / s.max(SIGMA_FLOOR).powi(2)
        })
        .collect()
}

fn require_positive(name: &'static str, v: &[f64]) -> Result<()> {
    if v.iter().any(|x| !(*x > 0.0)) {
        return Err(SimError::param(name, "values must be positive for a log-space fit"));
    }
    Ok(())
}

/// Fits T₂ = c·N^β. Parameters: `prefactor`, `beta`.
pub fn fit_power_law(n_values: &[f64], t2_values: &[f64], t2_errs: Option<&[f64]>) -> Result<FitResult> {
    let w = weights(n_values, t2_values, t2_errs, 3)?;
    require_positive("n_values", n_values)?;
    require_positive("t2_values", t2_values)?;
    let u: Vec<f64> = n_values.iter().map(|v| v.ln()).collect();
    let v: Vec<f64> = t2_values.iter().map(|v| v.ln()).collect();
    let lw = log_weights(t2_values, &w, t2_errs.is_some());
    Ok(line_result(["prefactor", "beta"], &u, &v, &lw, t2_errs.is_some(), |a, b| {
        ([a.exp(), b], [a.exp(), 1.0])
    }))
}

/// Fits r = A·exp(−hΔ/k_BT). Parameters: `amplitude`, `delta` (Hz).
/// A single temperature cannot separate A from Δ and is reported as
/// non-converged.
pub fn fit_boltzmann(temperatures: &[f64], ratios: &[f64], errs: Option<&[f64]>) -> Result<FitResult> {
    let names = vec!["amplitude", "delta"];
    let w = weights(temperatures, ratios, errs, 1)?;
    require_positive("temperatures", temperatures)?;
    require_positive("ratios", ratios)?;
    if temperatures.len() < 2 {
        return Ok(FitResult::failed(names, "one temperature cannot separate amplitude from splitting"));
    }
    let mut order: Vec<usize> = (0..temperatures.len()).collect();
    order.sort_by(|&a, &b| temperatures[a].total_cmp(&temperatures[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| temperatures[i]).collect();
    check_increasing(&sorted).map_err(|_| SimError::param("temperatures", "must be distinct"))?;
    let u: Vec<f64> = temperatures.iter().map(|t| 1.0 / t).collect();
    let v: Vec<f64> = ratios.iter().map(|r| r.ln()).collect();
    let lw = log_weights(ratios, &w, errs.is_some());
    Ok(line_result(["amplitude", "delta"], &u, &v, &lw, errs.is_some(), |a, b| {
        ([a.exp(), -b / H_OVER_KB], [a.exp(), 1.0 / H_OVER_KB])
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::single;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn exact_power_laws() {
        let n: Vec<f64> = (1..=32).map(|v| v as f64).collect();
        for beta in [1.0, 2.0 / 3.0] {
            let t: Vec<f64> = n.iter().map(|n| 0.4e-3 * n.powf(beta)).collect();
            let r = fit_power_law(&n, &t, None).unwrap();
            assert!(r.converged);
            assert!((r.get("beta").unwrap() - beta).abs() < 1e-9);
            assert!((r.get("prefactor").unwrap() / 0.4e-3 - 1.0).abs() < 1e-9);
        }
        assert!(fit_power_law(&[1.0, 2.0], &[1.0, 2.0], None).is_err());
    }

    #[test]
    fn noisy_linear_scaling() {
        let n: [f64; 6] = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0];
        let noise = Normal::new(0.0, 0.1).unwrap();
        let mut rng = single(3);
        let mut inside = 0;
        for _ in 0..50 {
            let t: Vec<f64> = n.iter().map(|n| 0.41e-3 * n.powf(1.02) * (1.0 + noise.sample(&mut rng))).collect();
            let e: Vec<f64> = t.iter().map(|t| 0.1 * t).collect();
            let r = fit_power_law(&n, &t, Some(&e)).unwrap();
            let b = r.get("beta").unwrap();
            inside += (0.92..=1.12).contains(&b) as usize;
            assert!(r.sigma("beta").unwrap() > 0.0);
        }
        assert!(inside >= 45, "{inside}/50");
    }

    #[test]
    fn boltzmann_round_trip() {
        let temps = [0.1, 0.2, 0.5, 1.0, 2.0, 4.0, 10.0];
        let delta = 48e9;
        let r: Vec<f64> = temps.iter().map(|t| (-H_OVER_KB * delta / t).exp()).collect();
        let f = fit_boltzmann(&temps, &r, None).unwrap();
        assert!(f.converged);
        assert!((f.get("delta").unwrap() / delta - 1.0).abs() < 1e-6);
        assert!((f.get("amplitude").unwrap() - 1.0).abs() < 1e-6);
        let single_point = fit_boltzmann(&[1.0], &[0.1], None).unwrap();
        assert!(!single_point.converged);
    }

    #[test]
    fn boltzmann_coverage() {
        // 10 % multiplicative noise on the 0.1–10 K grid; the cold points
        // carry almost no weight in linear space but full weight in log space
        let temps = [0.1, 0.2, 0.5, 1.0, 2.0, 4.0, 10.0];
        let delta = 48e9;
        let noise = Normal::new(0.0, 0.1).unwrap();
        let mut rng = single(8);
        let mut good = 0;
        for _ in 0..100 {
            let r: Vec<f64> = temps.iter().map(|t| (-H_OVER_KB * delta / t).exp() * (1.0 + noise.sample(&mut rng))).collect();
            let e: Vec<f64> = r.iter().map(|r| 0.1 * r).collect();
            let f = fit_boltzmann(&temps, &r, Some(&e)).unwrap();
            good += ((f.get("delta").unwrap() / delta - 1.0).abs() < 0.05) as usize;
        }
        assert!(good >= 95, "{good}/100");
    }

    #[test]
    fn boltzmann_scale_equivariance() {
        let temps = [0.3, 0.6, 1.2, 2.4];
        let r: Vec<f64> = temps.iter().map(|t| 2.0 * (-H_OVER_KB * 80e9 / t).exp()).collect();
        let a = fit_boltzmann(&temps, &r, None).unwrap();
        let r5: Vec<f64> = r.iter().map(|v| v * 5.0).collect();
        let b = fit_boltzmann(&temps, &r5, None).unwrap();
        assert!((a.get("delta").unwrap() / b.get("delta").unwrap() - 1.0).abs() < 1e-9);
    }
}
