//! Least-squares fits for the measured curves: decays (T₂, T₁), damped
//! oscillations (Rabi, Ramsey), pulsed-ODMR lines, power-law scaling (T₂ vs N) and Boltzmann
//! ratios (Δ vs temperature).
//!
//! All fits are inverse-variance weighted. With `yerr` supplied the
//! covariance is taken as is; without it, residuals set the scale
//! (covariance × χ²_red). A fit whose parameters cannot be identified from
//! the data returns `converged = false` and NaN sigmas rather than numbers
//! that look meaningful.

mod decay;
mod lineshape;
mod lm;
mod oscillation;
mod scaling;

pub use decay::{fit_decay, fit_decay_fixed_offset, DecayModel};
pub use lineshape::{fit_rabi_lineshape, rabi_lineshape_fwhm};
pub use oscillation::{fit_oscillation, Envelope};
pub use scaling::{fit_boltzmann, fit_power_law};

use crate::error::{Result, SimError};
use serde::ser::{Serialize, SerializeMap, Serializer};

/// Floor on per-point standard errors before inversion.
pub const SIGMA_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub names: Vec<&'static str>,
    pub params: Vec<f64>,
    /// Standard errors; NaN when the covariance could not be formed.
    pub sigmas: Vec<f64>,
    /// √(χ²/n) of the weighted residuals.
    pub residual_rms: f64,
    pub converged: bool,
    pub n_iter: usize,
    pub message: Option<String>,
}

impl FitResult {
    fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| *n == name)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.params[i])
    }

    pub fn sigma(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.sigmas[i])
    }

    pub(crate) fn failed(names: Vec<&'static str>, message: impl Into<String>) -> Self {
        let n = names.len();
        FitResult {
            names,
            params: vec![f64::NAN; n],
            sigmas: vec![f64::NAN; n],
            residual_rms: f64::NAN,
            converged: false,
            n_iter: 0,
            message: Some(message.into()),
        }
    }

    /// Marks the result unconverged, keeping the first diagnostic.
    pub(crate) fn reject(&mut self, why: impl Into<String>) {
        self.converged = false;
        if self.message.is_none() {
            self.message = Some(why.into());
        }
    }
}

fn finite_or_null(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl Serialize for FitResult {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let params: std::collections::BTreeMap<_, _> =
            self.names.iter().zip(&self.params).map(|(n, v)| (*n, finite_or_null(*v))).collect();
        let sigmas: std::collections::BTreeMap<_, _> =
            self.names.iter().zip(&self.sigmas).map(|(n, v)| (*n, finite_or_null(*v))).collect();
        let mut m = s.serialize_map(Some(6))?;
        m.serialize_entry("converged", &self.converged)?;
        m.serialize_entry("message", &self.message)?;
        m.serialize_entry("n_iter", &self.n_iter)?;
        m.serialize_entry("params", &params)?;
        m.serialize_entry("residual_rms", &finite_or_null(self.residual_rms))?;
        m.serialize_entry("sigmas", &sigmas)?;
        m.end()
    }
}

/// Checks lengths and finiteness; returns per-point weights.
pub(crate) fn weights(x: &[f64], y: &[f64], yerr: Option<&[f64]>, min_points: usize) -> Result<Vec<f64>> {
    if x.len() != y.len() {
        return Err(SimError::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < min_points {
        return Err(SimError::param("x", format!("need at least {min_points} points, got {}", x.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(SimError::param("y", "non-finite data"));
    }
    match yerr {
        None => Ok(vec![1.0; x.len()]),
        Some(e) => {
            if e.len() != x.len() {
                return Err(SimError::DimensionMismatch {
                    expected: x.len(),
                    got: e.len(),
                });
            }
            if e.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
                return Err(SimError::param("yerr", "errors must be finite and non-negative"));
            }
            Ok(e.iter().map(|s| 1.0 / s.max(SIGMA_FLOOR).powi(2)).collect())
        }
    }
}

pub(crate) fn check_increasing(x: &[f64]) -> Result<()> {
    if x.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(SimError::param("x", "must be strictly increasing"));
    }
    Ok(())
}

/// Builds a result from an LM outcome. `scale` maps each raw parameter to
/// the reported one and gives d(reported)/d(raw) for error propagation.
pub(crate) fn assemble(
    names: Vec<&'static str>,
    o: lm::Outcome,
    n_points: usize,
    have_errors: bool,
    report: impl Fn(usize, f64) -> (f64, f64),
) -> FitResult {
    let p = names.len();
    let dof = n_points.saturating_sub(p);
    let mut r = FitResult {
        names,
        params: vec![0.0; p],
        sigmas: vec![f64::NAN; p],
        residual_rms: (o.chi2 / n_points as f64).sqrt(),
        converged: o.converged,
        n_iter: o.n_iter,
        message: o.message,
    };
    let var_scale = if have_errors {
        1.0
    } else if dof > 0 {
        o.chi2 / dof as f64
    } else {
        f64::NAN
    };
    for i in 0..p {
        let (v, d) = report(i, o.theta[i]);
        r.params[i] = v;
        if let Some(c) = &o.covariance {
            r.sigmas[i] = d.abs() * (c[(i, i)].max(0.0) * var_scale).sqrt();
        }
    }
    if r.converged && r.params.iter().any(|v| !v.is_finite()) {
        r.reject("non-finite parameters");
    }
    if r.converged && r.sigmas.iter().any(|s| s.is_nan()) {
        r.reject("no degrees of freedom left to estimate uncertainties");
    }
    r
}
