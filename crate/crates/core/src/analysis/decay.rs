//! y = A·exp(−(x/T)^p) + C.

use super::lm::{minimize, Model, Outcome};
use super::{assemble, check_increasing, weights, FitResult};
use crate::error::Result;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DecayModel {
    Exp,
    /// Exponent held fixed.
    Stretched(f64),
    /// Exponent fitted.
    StretchedFree,
}

/// Decay times beyond this multiple of the sampled span are not resolved.
const MAX_SPAN_RATIO: f64 = 1e3;

/// θ = [A, ln T, C?, p?]; C is present unless fixed.
struct Decay {
    p_fixed: Option<f64>,
    offset: Option<f64>,
}

impl Decay {
    fn c_index(&self) -> Option<usize> {
        self.offset.is_none().then_some(2)
    }
    fn p_index(&self) -> Option<usize> {
        self.p_fixed.is_none().then_some(if self.offset.is_none() { 3 } else { 2 })
    }
}

impl Model for Decay {
    fn n_params(&self) -> usize {
        2 + self.c_index().is_some() as usize + self.p_index().is_some() as usize
    }

    fn eval(&self, t: &[f64], x: f64, g: &mut [f64]) -> f64 {
        let (a, tc) = (t[0], t[1].exp());
        let c = self.c_index().map_or_else(|| self.offset.unwrap(), |i| t[i]);
        let p = self.p_index().map_or_else(|| self.p_fixed.unwrap(), |i| t[i]);
        let r = x / tc;
        let u = if r > 0.0 { r.powf(p) } else { 0.0 };
        let e = (-u).exp();
        g[0] = e;
        g[1] = a * e * p * u;
        if let Some(i) = self.c_index() {
            g[i] = 1.0;
        }
        if let Some(i) = self.p_index() {
            g[i] = if u > 0.0 { -a * e * u * r.ln() } else { 0.0 };
        }
        a * e + c
    }
}

/// Offset from the tail, amplitude from the head, T from the 1/e crossing.
fn initial_guess(x: &[f64], y: &[f64], offset: Option<f64>) -> (f64, f64, f64) {
    let n = x.len();
    let c = offset.unwrap_or_else(|| {
        let k = (n / 5).max(1);
        y[n - k..].iter().sum::<f64>() / k as f64
    });
    let a = y[0] - c;
    let span = x[n - 1];
    if a == 0.0 {
        return (a, c, span);
    }
    let target = a / std::f64::consts::E;
    let mut tc = span;
    for i in 1..n {
        let (d0, d1) = (y[i - 1] - c, y[i] - c);
        if (d1 / a) <= (target / a) {
            let f = if d0 != d1 { (d0 - target) / (d0 - d1) } else { 0.0 };
            tc = x[i - 1] + f.clamp(0.0, 1.0) * (x[i] - x[i - 1]);
            break;
        }
    }
    if !(tc > 0.0) {
        tc = span.abs().max(f64::MIN_POSITIVE);
    }
    (a, c, tc)
}

fn names(m: &Decay) -> Vec<&'static str> {
    let mut v = vec!["amplitude", "t"];
    if m.c_index().is_some() {
        v.push("offset");
    }
    if m.p_index().is_some() {
        v.push("p");
    }
    v
}

fn run(x: &[f64], y: &[f64], yerr: Option<&[f64]>, model: DecayModel, offset: Option<f64>) -> Result<FitResult> {
    let w = weights(x, y, yerr, 4)?;
    check_increasing(x)?;
    let m = Decay {
        p_fixed: match model {
            DecayModel::Exp => Some(1.0),
            DecayModel::Stretched(p) => Some(p),
            DecayModel::StretchedFree => None,
        },
        offset,
    };
    let (a, c, tc) = initial_guess(x, y, offset);
    // A few starts around the crossing estimate (and exponent, if free);
    // the lowest χ² wins.
    let p_starts: &[f64] = if m.p_index().is_some() { &[1.0, 2.0, 4.0] } else { &[0.0] };
    let mut best: Option<Outcome> = None;
    for &ts in &[1.0, 0.5, 2.0] {
        for &p0 in p_starts {
            let mut th = vec![a, (tc * ts).ln()];
            if m.c_index().is_some() {
                th.push(c);
            }
            if m.p_index().is_some() {
                th.push(p0);
            }
            let o = minimize(&m, &th, x, y, &w);
            let better = match &best {
                None => true,
                Some(b) => (o.converged, -o.chi2) > (b.converged, -b.chi2) || (o.converged == b.converged && o.chi2 < b.chi2),
            };
            if better {
                best = Some(o);
            }
        }
    }
    let o = best.expect("at least one start");
    let mut r = assemble(names(&m), o, x.len(), yerr.is_some(), |i, v| if i == 1 { (v.exp(), v.exp()) } else { (v, 1.0) });
    let span = x[x.len() - 1] - x[0].min(0.0);
    if r.converged && r.params[1] > MAX_SPAN_RATIO * span {
        r.reject("decay time far beyond the sampled range: no decay resolved");
    }
    if r.converged && r.params[0] == 0.0 {
        r.reject("zero amplitude");
    }
    Ok(r)
}

/// Fits A·exp(−(x/T)^p) + C with a free offset. Parameters: `amplitude`,
/// `t`, `offset`, and `p` for [`DecayModel::StretchedFree`].
pub fn fit_decay(x: &[f64], y: &[f64], yerr: Option<&[f64]>, model: DecayModel) -> Result<FitResult> {
    run(x, y, yerr, model, None)
}

/// As [`fit_decay`] with the asymptote pinned to `offset`.
pub fn fit_decay_fixed_offset(
    x: &[f64],
    y: &[f64],
    yerr: Option<&[f64]>,
    model: DecayModel,
    offset: f64,
) -> Result<FitResult> {
    run(x, y, yerr, model, Some(offset))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::single;
    use rand_distr::{Distribution, Normal};

    fn stretched(x: &[f64], a: f64, t: f64, p: f64, c: f64) -> Vec<f64> {
        x.iter().map(|x| a * (-(x / t).powf(p)).exp() + c).collect()
    }

    #[test]
    fn fourth_power_round_trip() {
        let x: Vec<f64> = (1..=30).map(|i| i as f64 * 1e-3).collect();
        let y = stretched(&x, 0.4, 13e-3, 4.0, 0.5);
        let fixed = fit_decay(&x, &y, None, DecayModel::Stretched(4.0)).unwrap();
        assert!(fixed.converged, "{fixed:?}");
        assert!((fixed.get("t").unwrap() / 13e-3 - 1.0).abs() < 1e-6);
        let free = fit_decay(&x, &y, None, DecayModel::StretchedFree).unwrap();
        assert!(free.converged, "{free:?}");
        assert!((free.get("t").unwrap() / 13e-3 - 1.0).abs() < 1e-6);
        assert!((free.get("p").unwrap() - 4.0).abs() < 0.01);
    }

    #[test]
    fn exponential_with_fixed_offset() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.2).collect();
        let y = stretched(&x, 1.0, 1.3, 1.0, 0.1);
        let r = fit_decay_fixed_offset(&x, &y, None, DecayModel::Exp, 0.1).unwrap();
        assert!(r.converged);
        assert!((r.get("t").unwrap() - 1.3).abs() < 1e-9);
        assert!(r.get("offset").is_none());
    }

    #[test]
    fn constant_data_is_not_a_decay() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let r = fit_decay(&x, &[0.7; 10], None, DecayModel::Stretched(4.0)).unwrap();
        assert!(!r.converged);
        assert!(r.message.is_some());
        let r = fit_decay_fixed_offset(&x, &[0.7; 10], None, DecayModel::Exp, 0.2).unwrap();
        assert!(!r.converged, "{r:?}");
    }

    #[test]
    fn preconditions() {
        assert!(fit_decay(&[1.0, 2.0, 3.0], &[1.0, 0.5, 0.2], None, DecayModel::Exp).is_err());
        assert!(fit_decay(&[1.0, 3.0, 2.0, 4.0], &[1.0, 0.5, 0.2, 0.1], None, DecayModel::Exp).is_err());
    }

    #[test]
    fn scale_equivariance() {
        let x: Vec<f64> = (1..=25).map(|i| i as f64 * 0.1).collect();
        let y = stretched(&x, 0.8, 0.9, 2.0, 0.05);
        let base = fit_decay(&x, &y, None, DecayModel::StretchedFree).unwrap();
        let xs: Vec<f64> = x.iter().map(|v| v * 37.0).collect();
        let scaled = fit_decay(&xs, &y, None, DecayModel::StretchedFree).unwrap();
        assert!((scaled.get("t").unwrap() / (37.0 * base.get("t").unwrap()) - 1.0).abs() < 1e-9);
        let ys: Vec<f64> = y.iter().map(|v| v * 5.0).collect();
        let tall = fit_decay(&x, &ys, None, DecayModel::StretchedFree).unwrap();
        assert!((tall.get("t").unwrap() / base.get("t").unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn two_sigma_coverage() {
        let x: Vec<f64> = (1..=30).map(|i| i as f64 * 1e-3).collect();
        let truth = stretched(&x, 0.4, 13e-3, 4.0, 0.5);
        let noise = Normal::new(0.0, 0.05 * 0.4).unwrap();
        let err = vec![0.05 * 0.4; x.len()];
        let mut rng = single(2024);
        let mut hits = 0;
        let trials = 200;
        for _ in 0..trials {
            let y: Vec<f64> = truth.iter().map(|v| v + noise.sample(&mut rng)).collect();
            let r = fit_decay(&x, &y, Some(&err), DecayModel::Stretched(4.0)).unwrap();
            if r.converged && (r.get("t").unwrap() - 13e-3).abs() <= 2.0 * r.sigma("t").unwrap() {
                hits += 1;
            }
        }
        assert!(hits as f64 >= 0.95 * trials as f64, "coverage {hits}/{trials}");
    }

    #[test]
    fn sigma_shrinks_with_points() {
        let noise = Normal::new(0.0, 0.02).unwrap();
        let mut rng = single(5);
        let mean_sigma = |n: usize, rng: &mut _| {
            let x: Vec<f64> = (1..=n).map(|i| i as f64 * 3.0 / n as f64).collect();
            let truth = stretched(&x, 1.0, 1.0, 1.0, 0.0);
            let mut s = 0.0;
            for _ in 0..40 {
                let y: Vec<f64> = truth.iter().map(|v| v + noise.sample(rng)).collect();
                s += fit_decay(&x, &y, Some(&vec![0.02; n]), DecayModel::Exp).unwrap().sigma("t").unwrap();
            }
            s / 40.0
        };
        let (s1, s4) = (mean_sigma(20, &mut rng), mean_sigma(80, &mut rng));
        assert!(((s1 / s4) / 2.0 - 1.0).abs() < 0.2, "{s1} {s4}");
    }
}
