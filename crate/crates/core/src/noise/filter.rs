use super::NoiseModel;
use crate::error::{Result, SimError};
use crate::quad;
use std::f64::consts::{FRAC_PI_2, PI};

/// sin(N u)/sin(u), continuous through u = 0.
fn dirichlet_ratio(n: f64, u: f64) -> f64 {
    if u.abs() < 1e-8 {
        n * (1.0 - (n * n - 1.0) * u * u / 6.0)
    } else {
        (n * u).sin() / u.sin()
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Ideal CPMG-N filter |f̃(ω)|² = 8 sin⁴(ωT/4N)·sin²|cos²(ωT/2)/cos²(ωT/2N).
///
/// Written as 8 sin⁴(θ/2)·(sin Nu / sin u)² with θ = ωT/2N and u the offset
/// of θ from the nearest pole π/2 + kπ; this is an identity for sin² (N even)
/// and cos² (N odd) and removes the pole analytically.
pub fn cpmg_filter(n_pulses: usize, total_time: f64, omega: f64) -> Result<f64> {
    if n_pulses == 0 {
        return Err(SimError::param("n_pulses", "must be at least 1"));
    }
    Ok(filter_value(n_pulses, omega * total_time))
}

fn filter_value(n: usize, x: f64) -> f64 {
    if n == 0 {
        let s = (0.5 * x).sin();
        return 2.0 * s * s;
    }
    let nf = n as f64;
    let theta = x / (2.0 * nf);
    let k = ((theta - FRAC_PI_2) / PI).round();
    let u = theta - (FRAC_PI_2 + k * PI);
    let s = (0.5 * theta).sin();
    let r = dirichlet_ratio(nf, u);
    8.0 * s.powi(4) * r * r
}

/// |f̃(ω)|²/ω², finite as ω → 0; `n_pulses = 0` is free induction.
pub fn filter_over_omega2(n_pulses: usize, total_time: f64, omega: f64) -> f64 {
    let x = omega * total_time;
    if n_pulses == 0 {
        let s = sinc(0.5 * x);
        return 0.5 * total_time * total_time * s * s;
    }
    let nf = n_pulses as f64;
    let theta = x / (2.0 * nf);
    let k = ((theta - FRAC_PI_2) / PI).round();
    let u = theta - (FRAC_PI_2 + k * PI);
    // sin⁴(θ/2)/ω² = (T/4N)²·sinc²(θ/2)·sin²(θ/2)
    let a = total_time / (4.0 * nf) * sinc(0.5 * theta);
    let s = (0.5 * theta).sin();
    let r = dirichlet_ratio(nf, u);
    8.0 * a * a * s * s * r * r
}

/// Centres of the N ideal π pulses, at T(2k − 1)/2N.
pub fn pulse_times(n_pulses: usize, total_time: f64) -> Vec<f64> {
    (1..=n_pulses).map(|k| total_time * (2 * k - 1) as f64 / (2 * n_pulses) as f64).collect()
}

const REL_TOL: f64 = 1e-9;
const MAX_PANELS: usize = 400_000;
/// χ below this is indistinguishable from zero in W = e^{−χ}.
const ABS_TOL: f64 = 1e-14;

/// χ(T) = (1/π)∫₀^∞ S(ω)|f̃(ω)|²/ω² dω, so that W = exp(−χ).
///
/// OU baths use the equivalent time-domain closed form (exact, O(N));
/// tabulated spectra are integrated numerically by [`chi_spectral`].
pub fn chi(model: &NoiseModel, n_pulses: usize, total_time: f64) -> Result<f64> {
    model.validate()?;
    check_time(total_time)?;
    match model {
        NoiseModel::QuasiStatic { sigma } => Ok(if n_pulses == 0 { 0.5 * sigma * sigma * total_time * total_time } else { 0.0 }),
        NoiseModel::Ou { sigma, tau_c } => Ok(ou_chi(*sigma, *tau_c, n_pulses, total_time)),
        NoiseModel::Tabulated(_) => chi_spectral(model, n_pulses, total_time),
        NoiseModel::SingleC13 { .. } => Err(SimError::UnsupportedNoise {
            model: model.name(),
            operation: "coherence_decay",
        }),
    }
}

fn check_time(total_time: f64) -> Result<()> {
    if !(total_time >= 0.0 && total_time.is_finite()) {
        return Err(SimError::param("total_time", "must be non-negative"));
    }
    Ok(())
}

/// u − 1 + e^{−u}, accurate for small u.
fn ramp(u: f64) -> f64 {
    if u < 1e-3 {
        u * u * (0.5 - u * (1.0 / 6.0 - u / 24.0))
    } else {
        u + (-u).exp_m1()
    }
}

/// ½·Var(∫ s(t)δ(t) dt) for OU noise and the CPMG toggling function s(t),
/// summed interval by interval: each interval contributes 2σ²τ²·ramp(L/τ)
/// on its own and σ²τ²(1−e^{−L_k/τ})(1−e^{−L_l/τ})e^{−gap/τ} per pair.
fn ou_chi(sigma: f64, tau: f64, n: usize, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let mut edges = vec![0.0];
    edges.extend(pulse_times(n, t));
    edges.push(t);
    let mut diag = 0.0;
    let mut cross = 0.0;
    // carry = Σ_{k<l} s_k (1 − e^{−u_k}) e^{−(t_l − t_{k+1})/τ}
    let mut carry = 0.0;
    let mut sign = 1.0;
    for w in edges.windows(2) {
        let u = (w[1] - w[0]) / tau;
        let g = -(-u).exp_m1();
        diag += 2.0 * ramp(u);
        cross += 2.0 * sign * g * carry;
        carry = carry * (-u).exp() + sign * g;
        sign = -sign;
    }
    0.5 * sigma * sigma * tau * tau * (diag + cross)
}

/// χ by adaptive quadrature of the spectral integral (OU or tabulated).
pub fn chi_spectral(model: &NoiseModel, n_pulses: usize, total_time: f64) -> Result<f64> {
    model.validate()?;
    check_time(total_time)?;
    if total_time == 0.0 {
        return Ok(0.0);
    }
    let t = total_time;
    let n = n_pulses;
    match model {
        NoiseModel::Ou { sigma, tau_c } => {
            let (sigma, tau) = (*sigma, *tau_c);
            let f = |w: f64| super::ou_spectrum(sigma, tau, w) * filter_over_omega2(n, t, w) / PI;
            let peak = PI * (n.max(1) as f64) / t;
            let mut upper = 64.0 * peak.max(1.0 / tau);
            let max_f = if n == 0 { 2.0 } else { 8.0 * (n * n) as f64 };
            let mut total = 0.0;
            let mut lo = 0.0;
            loop {
                let panels = ((upper - lo) * t / PI).ceil().clamp(16.0, 50_000.0) as usize;
                let part = quad::integrate(f, lo, upper, panels, REL_TOL, ABS_TOL, MAX_PANELS)?;
                total += part.value;
                // S ≤ 2σ²/(τω²) and |f̃|² ≤ max_f bound the remaining tail
                let tail = max_f * 2.0 * sigma * sigma / (tau * PI) / (3.0 * upper.powi(3));
                if tail <= (1e-3 * REL_TOL * total.abs()).max(1e-3 * ABS_TOL) {
                    return Ok(total);
                }
                lo = upper;
                upper *= 4.0;
                if upper > 1e30 {
                    return Err(SimError::Quadrature {
                        error: tail,
                        intervals: 0,
                    });
                }
            }
        }
        NoiseModel::Tabulated(s) => {
            let f = |w: f64| s.at(w) * filter_over_omega2(n, t, w) / PI;
            // one panel per node interval, refined so each panel spans at most
            // half an oscillation of the filter
            let osc = PI / t;
            let mut edges = vec![s.omega[0]];
            for w in s.omega.windows(2) {
                let pieces = ((w[1] - w[0]) / osc).ceil().clamp(1.0, 1e5) as usize;
                for k in 1..=pieces {
                    edges.push(w[0] + (w[1] - w[0]) * k as f64 / pieces as f64);
                }
            }
            Ok(quad::integrate_breaks(f, &edges, REL_TOL, ABS_TOL, MAX_PANELS.max(4 * edges.len()))?.value)
        }
        _ => Err(SimError::UnsupportedNoise {
            model: model.name(),
            operation: "spectral integral",
        }),
    }
}

/// W(T) = exp(−χ(T)) for an N-pulse CPMG sequence (N = 0: free induction).
pub fn coherence_decay(model: &NoiseModel, n_pulses: usize, total_time: f64) -> Result<f64> {
    Ok((-chi(model, n_pulses, total_time)?).exp())
}
