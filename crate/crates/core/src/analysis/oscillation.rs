//! y = A·env(x)·cos(2πf·x + φ) + C.

use super::lm::{minimize, Model, Outcome};
use super::{assemble, check_increasing, weights, FitResult};
use crate::constants::TAU;
use crate::error::Result;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Envelope {
    None,
    /// exp(−x/T)
    Exp,
    /// exp(−(x/T)²)
    Gauss,
}

/// θ = [A, f, φ, C, ln T?].
struct Osc(Envelope);

impl Model for Osc {
    fn n_params(&self) -> usize {
        if self.0 == Envelope::None {
            4
        } else {
            5
        }
    }

    fn eval(&self, t: &[f64], x: f64, g: &mut [f64]) -> f64 {
        let (a, f, ph, c) = (t[0], t[1], t[2], t[3]);
        let (env, denv_dlnt) = match self.0 {
            Envelope::None => (1.0, 0.0),
            Envelope::Exp => {
                let u = x / t[4].exp();
                let e = (-u).exp();
                (e, e * u)
            }
            Envelope::Gauss => {
                let u = (x / t[4].exp()).powi(2);
                let e = (-u).exp();
                (e, 2.0 * e * u)
            }
        };
        let arg = TAU * f * x + ph;
        let (s, co) = arg.sin_cos();
        g[0] = env * co;
        g[1] = -a * env * s * TAU * x;
        g[2] = -a * env * s;
        g[3] = 1.0;
        if self.0 != Envelope::None {
            g[4] = a * denv_dlnt * co;
        }
        a * env * co + c
    }
}

/// Peak of the (oversampled) periodogram; returns (f, A, φ).
fn periodogram_peak(x: &[f64], r: &[f64]) -> (f64, f64, f64) {
    let n = x.len();
    let span = x[n - 1] - x[0];
    let min_dx = x.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let f_max = 0.5 / min_dx.max(span / (n as f64 * 50.0));
    let df = 1.0 / (10.0 * span);
    let steps = ((f_max / df).ceil() as usize).clamp(1, 200_000);
    let proj = |f: f64| {
        let (mut c, mut s) = (0.0, 0.0);
        for (xi, ri) in x.iter().zip(r) {
            let (sn, cs) = (TAU * f * xi).sin_cos();
            c += ri * cs;
            s += ri * sn;
        }
        (c, s)
    };
    let mut best = (0.0, 0.0, 0.0);
    for k in 1..=steps {
        let f = k as f64 * df;
        let (c, s) = proj(f);
        let p = c * c + s * s;
        if p > best.0 {
            best = (p, f, 0.0);
        }
    }
    let f = best.1;
    let (c, s) = proj(f);
    (f, 2.0 * (c * c + s * s).sqrt() / n as f64, (-s).atan2(c))
}

fn wrap(ph: f64) -> f64 {
    let w = ph.rem_euclid(TAU);
    if w > std::f64::consts::PI {
        w - TAU
    } else {
        w
    }
}

/// Fits a cosine with optional decay envelope. Parameters: `amplitude`
/// (≥ 0), `frequency` (≥ 0, cycles per x unit), `phase` (−π, π], `offset`,
/// and `t` unless `envelope` is [`Envelope::None`].
pub fn fit_oscillation(x: &[f64], y: &[f64], yerr: Option<&[f64]>, envelope: Envelope) -> Result<FitResult> {
    let m = Osc(envelope);
    let w = weights(x, y, yerr, m.n_params() + 1)?;
    check_increasing(x)?;
    let c0 = y.iter().zip(&w).map(|(y, w)| y * w).sum::<f64>() / w.iter().sum::<f64>();
    let r: Vec<f64> = y.iter().map(|v| v - c0).collect();
    let (f0, a0, ph0) = periodogram_peak(x, &r);
    let span = x[x.len() - 1] - x[0].min(0.0);
    let t_starts: &[f64] = if envelope == Envelope::None { &[0.0] } else { &[1.0, 0.3, 3.0] };
    let mut best: Option<Outcome> = None;
    for &ts in t_starts {
        let mut th = vec![a0, f0, ph0, c0];
        if envelope != Envelope::None {
            th.push((span * ts).ln());
            // undo the envelope's average damping in the amplitude guess
            th[0] = a0 * (1.0 + 1.0 / ts).min(5.0);
        }
        let o = minimize(&m, &th, x, y, &w);
        if best.as_ref().is_none_or(|b| (o.converged && !b.converged) || (o.converged == b.converged && o.chi2 < b.chi2)) {
            best = Some(o);
        }
    }
    let mut o = best.expect("at least one start");
    // canonical sign conventions: A ≥ 0, f ≥ 0
    if o.theta[1] < 0.0 {
        o.theta[1] = -o.theta[1];
        o.theta[2] = -o.theta[2];
    }
    if o.theta[0] < 0.0 {
        o.theta[0] = -o.theta[0];
        o.theta[2] += std::f64::consts::PI;
    }
    o.theta[2] = wrap(o.theta[2]);
    let mut names = vec!["amplitude", "frequency", "phase", "offset"];
    if envelope != Envelope::None {
        names.push("t");
    }
    let mut res = assemble(names, o, x.len(), yerr.is_some(), |i, v| if i == 4 { (v.exp(), v.exp()) } else { (v, 1.0) });
    if res.converged && res.params[0] == 0.0 {
        res.reject("zero amplitude");
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::single;
    use rand_distr::{Distribution, Normal};

    fn fringe(x: &[f64], a: f64, f: f64, ph: f64, c: f64, env: impl Fn(f64) -> f64) -> Vec<f64> {
        x.iter().map(|&x| a * env(x) * (TAU * f * x + ph).cos() + c).collect()
    }

    #[test]
    fn ramsey_frequency_round_trip() {
        let x: Vec<f64> = (0..101).map(|i| i as f64 * 20e-9).collect();
        let y = fringe(&x, 0.3, 550e3, 0.4, 0.5, |x| (-(x / 1.5e-6).powi(2)).exp());
        let r = fit_oscillation(&x, &y, None, Envelope::Gauss).unwrap();
        assert!(r.converged, "{r:?}");
        assert!((r.get("frequency").unwrap() / 550e3 - 1.0).abs() < 1e-6);
        assert!((r.get("t").unwrap() / 1.5e-6 - 1.0).abs() < 1e-6);
        assert!((r.get("phase").unwrap() - 0.4).abs() < 1e-6);
    }

    #[test]
    fn rabi_without_decay() {
        // starts dark, rises to bright: negative cosine
        let x: Vec<f64> = (0..41).map(|i| i as f64 * 10e-9).collect();
        let y = fringe(&x, -0.25, 5e6, 0.0, 0.3, |_| 1.0);
        let r = fit_oscillation(&x, &y, None, Envelope::None).unwrap();
        assert!(r.converged, "{r:?}");
        assert!((r.get("amplitude").unwrap() - 0.25).abs() < 1e-9);
        assert!((r.get("phase").unwrap().abs() - std::f64::consts::PI).abs() < 1e-9);
        assert!((r.get("frequency").unwrap() / 5e6 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn exponential_envelope() {
        let x: Vec<f64> = (0..80).map(|i| i as f64 * 0.05).collect();
        let y = fringe(&x, 1.0, 2.2, -1.0, 0.0, |x| (-x / 1.7).exp());
        let r = fit_oscillation(&x, &y, None, Envelope::Exp).unwrap();
        assert!(r.converged);
        assert!((r.get("t").unwrap() / 1.7 - 1.0).abs() < 1e-8);
    }

    #[test]
    fn zero_amplitude_does_not_converge() {
        let x: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let r = fit_oscillation(&x, &[0.5; 30], None, Envelope::Gauss).unwrap();
        assert!(!r.converged);
        assert!(r.sigmas.iter().all(|s| s.is_nan()));
    }

    #[test]
    fn noisy_gaussian_ramsey_t2star() {
        let x: Vec<f64> = (0..121).map(|i| i as f64 * 10e-9).collect();
        let truth = fringe(&x, 0.25, 3e6, 0.0, 0.5, |x| (-(x / 300e-9).powi(2)).exp());
        let noise = Normal::new(0.0, 0.01).unwrap();
        let mut rng = single(11);
        let y: Vec<f64> = truth.iter().map(|v| v + noise.sample(&mut rng)).collect();
        let r = fit_oscillation(&x, &y, Some(&vec![0.01; x.len()]), Envelope::Gauss).unwrap();
        assert!(r.converged);
        assert!((r.get("t").unwrap() / 300e-9 - 1.0).abs() < 0.1);
    }

    #[test]
    fn scale_equivariance() {
        let x: Vec<f64> = (0..60).map(|i| i as f64 * 0.1).collect();
        let y = fringe(&x, 0.5, 0.8, 0.3, 0.1, |x| (-(x / 4.0).powi(2)).exp());
        let a = fit_oscillation(&x, &y, None, Envelope::Gauss).unwrap();
        let xs: Vec<f64> = x.iter().map(|v| v * 1e-6).collect();
        let b = fit_oscillation(&xs, &y, None, Envelope::Gauss).unwrap();
        assert!((b.get("t").unwrap() / (1e-6 * a.get("t").unwrap()) - 1.0).abs() < 1e-9);
        assert!((b.get("frequency").unwrap() * 1e-6 / a.get("frequency").unwrap() - 1.0).abs() < 1e-9);
    }
}
