use super::NoiseModel;
use crate::error::{Result, SimError};
use crate::rng::{self, ShotRng};
use rand_distr::{Distribution, StandardNormal};

/// S(ω) = 2σ²τ/(1 + ω²τ²).
pub fn ou_spectrum(sigma: f64, tau_c: f64, omega: f64) -> f64 {
    let wt = omega * tau_c;
    2.0 * sigma * sigma * tau_c / (1.0 + wt * wt)
}

/// Current value of a stationary OU process, advanced with exact
/// joint sampling of the endpoint and the time integral.
#[derive(Debug, Clone, Copy)]
pub struct OuState {
    pub x: f64,
    sigma: f64,
    tau: f64,
}

/// 2u − 3 + 4e^{−u} − e^{−2u}, accurate for small u.
fn integral_variance_factor(u: f64) -> f64 {
    if u < 1e-2 {
        u * u * u * (2.0 / 3.0 - u * (0.5 - u * (7.0 / 30.0 - u / 12.0)))
    } else {
        let e = -(-u).exp_m1();
        2.0 * u - 2.0 * e - e * e
    }
}

impl OuState {
    /// Draws x from the stationary distribution N(0, σ²).
    pub fn stationary(sigma: f64, tau: f64, rng: &mut ShotRng) -> Self {
        let z: f64 = StandardNormal.sample(rng);
        Self { x: sigma * z, sigma, tau }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// AR(1) update x ← x·e^{−h/τ} + σ·sqrt(1 − e^{−2h/τ})·ξ.
    pub fn step(&mut self, h: f64, rng: &mut ShotRng) {
        let a = (-h / self.tau).exp();
        let s = self.sigma * (-(-2.0 * h / self.tau).exp_m1()).max(0.0).sqrt();
        let z: f64 = StandardNormal.sample(rng);
        self.x = a * self.x + s * z;
    }

    /// Advances by `h` and returns ∫ x dt over the step, sampled jointly
    /// with the new endpoint.
    pub fn advance(&mut self, h: f64, rng: &mut ShotRng) -> f64 {
        if h <= 0.0 {
            return 0.0;
        }
        let (sig, tau) = (self.sigma, self.tau);
        let u = h / tau;
        let e = -(-u).exp_m1(); // 1 − e^{−u}
        let a = 1.0 - e;
        let var_x = sig * sig * e * (2.0 - e);
        let cov = sig * sig * tau * e * e;
        let var_i = sig * sig * tau * tau * integral_variance_factor(u);
        let z1: f64 = StandardNormal.sample(rng);
        let z2: f64 = StandardNormal.sample(rng);
        let mean_i = tau * e * self.x;
        let (dx, di) = if var_x > 0.0 {
            let sx = var_x.sqrt();
            let cond = (var_i - cov * cov / var_x).max(0.0);
            (sx * z1, cov / sx * z1 + cond.sqrt() * z2)
        } else {
            (0.0, var_i.max(0.0).sqrt() * z2)
        };
        self.x = a * self.x + dx;
        mean_i + di
    }
}

/// Stationary OU trace of `n_steps` samples spaced by `dt`.
pub fn sample_ou(model: &NoiseModel, dt: f64, n_steps: usize, seed: u64) -> Result<Vec<f64>> {
    let NoiseModel::Ou { sigma, tau_c } = *model else {
        return Err(SimError::UnsupportedNoise {
            model: model.name(),
            operation: "sample_ou",
        });
    };
    model.validate()?;
    if !(dt > 0.0) {
        return Err(SimError::param("dt", "must be positive"));
    }
    let mut rng = rng::single(seed);
    let mut st = OuState::stationary(sigma, tau_c, &mut rng);
    let mut out = Vec::with_capacity(n_steps);
    for k in 0..n_steps {
        if k > 0 {
            st.step(dt, &mut rng);
        }
        out.push(st.x);
    }
    Ok(out)
}
