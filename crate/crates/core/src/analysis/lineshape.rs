//! Pulsed-ODMR line of a square pulse of length τ:
//! y = A·Ω²/W²·sin²(πτW) + C, W = √(Ω² + (f − f₀)²).

use super::lm::{minimize, Model, Outcome};
use super::{assemble, check_increasing, weights, FitResult};
use crate::error::{Result, SimError};
use std::f64::consts::PI;

/// θ = [A, f₀ − x_ref, Ω, C]; x is measured from `x_ref` to keep the
/// detunings well resolved next to GHz carrier frequencies.
struct Line {
    tau: f64,
}

impl Model for Line {
    fn n_params(&self) -> usize {
        4
    }

    fn eval(&self, t: &[f64], x: f64, g: &mut [f64]) -> f64 {
        let (a, f0, om, c) = (t[0], t[1], t[2], t[3]);
        let d = x - f0;
        let w2 = om * om + d * d;
        if w2 == 0.0 {
            g.fill(0.0);
            g[3] = 1.0;
            return c;
        }
        let w = w2.sqrt();
        let s = (PI * self.tau * w).sin();
        let ds2_dw = PI * self.tau * (2.0 * PI * self.tau * w).sin();
        let l = om * om / w2;
        let s2 = s * s;
        g[0] = l * s2;
        // ∂/∂δ, then f₀ = −δ
        let dd = a * (-2.0 * om * om * d / (w2 * w2) * s2 + l * ds2_dw * d / w);
        g[1] = -dd;
        g[2] = a * (2.0 * om * d * d / (w2 * w2) * s2 + l * ds2_dw * om / w);
        g[3] = 1.0;
        a * l * s2 + c
    }
}

/// Full width at half maximum of the line for Rabi frequency `rabi` and
/// pulse length `tau`, measured outward from the centre.
pub fn rabi_lineshape_fwhm(rabi: f64, tau: f64) -> f64 {
    let shape = |d: f64| {
        let w2 = rabi * rabi + d * d;
        rabi * rabi / w2 * (PI * tau * w2.sqrt()).sin().powi(2)
    };
    let half = 0.5 * shape(0.0);
    if !(half > 0.0) {
        return f64::NAN;
    }
    // step out to the first crossing, then bisect
    let step = 0.01 / tau;
    let mut hi = step;
    while shape(hi) > half {
        hi += step;
        if hi > 1e4 / tau {
            return f64::NAN;
        }
    }
    let mut lo = hi - step;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if shape(mid) > half {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo + hi
}

/// Fits the ODMR line of a pulse of length `tau`. Parameters:
/// `amplitude`, `center` (Hz), `rabi` (Hz), `offset`.
pub fn fit_rabi_lineshape(f: &[f64], y: &[f64], yerr: Option<&[f64]>, tau: f64) -> Result<FitResult> {
    let w = weights(f, y, yerr, 5)?;
    check_increasing(f)?;
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(SimError::param("tau", format!("must be positive, got {tau}")));
    }
    let x_ref = 0.5 * (f[0] + f[f.len() - 1]);
    let x: Vec<f64> = f.iter().map(|v| v - x_ref).collect();
    let m = Line { tau };

    let mut sorted = y.to_vec();
    sorted.sort_by(f64::total_cmp);
    let c0 = sorted[sorted.len() / 5];
    let (imax, ymax) = y.iter().enumerate().fold((0, f64::NEG_INFINITY), |b, (i, v)| if *v > b.1 { (i, *v) } else { b });
    let a0 = ymax - c0;
    let names = vec!["amplitude", "center", "rabi", "offset"];
    if !(a0 > 0.0) {
        return Ok(FitResult::failed(names, "flat spectrum: no line to fit"));
    }
    let mut best: Option<Outcome> = None;
    for om in [1.0, 0.6, 1.6] {
        let th = [a0, x[imax], om * 0.5 / tau, c0];
        let o = minimize(&m, &th, &x, y, &w);
        if best.as_ref().is_none_or(|b| (o.converged && !b.converged) || (o.converged == b.converged && o.chi2 < b.chi2)) {
            best = Some(o);
        }
    }
    let mut r = assemble(names, best.expect("one start"), x.len(), yerr.is_some(), |i, v| match i {
        1 => (v + x_ref, 1.0),
        2 => (v.abs(), 1.0),
        _ => (v, 1.0),
    });
    if r.converged && !(r.params[0] > 0.0) {
        r.reject("line amplitude is not positive");
    }
    Ok(r)
}
