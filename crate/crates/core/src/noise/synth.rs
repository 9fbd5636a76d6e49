use super::NoiseModel;
use crate::constants::TAU;
use crate::error::{Result, SimError};
use crate::rng::ShotRng;
use rand_distr::{Distribution, StandardNormal};

/// Hard cap on the number of Fourier modes in one synthesizer.
const MAX_MODES: usize = 200_000;

/// Gaussian noise traces with a prescribed spectrum, built as a random
/// Fourier series δ(t) = Σ a_k cos ω_k t + b_k sin ω_k t on a midpoint grid
/// ω_k = (k − ½)Δω, with a_k, b_k ~ N(0, S(ω_k)Δω/π).
///
/// Δω is chosen so the series period is at least ten times `t_max`.
#[derive(Debug, Clone)]
pub struct SpectrumSynth {
    omega: Vec<f64>,
    amp: Vec<f64>,
}

/// One realisation of a [`SpectrumSynth`].
#[derive(Debug, Clone)]
pub struct SynthTrace {
    omega: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl SpectrumSynth {
    pub fn new(model: &NoiseModel, t_max: f64) -> Result<Self> {
        let NoiseModel::Tabulated(spec) = model else {
            return Err(SimError::UnsupportedNoise {
                model: model.name(),
                operation: "spectrum synthesis",
            });
        };
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(SimError::param("t_max", format!("must be positive, got {t_max}")));
        }
        let dw = TAU / (10.0 * t_max);
        let n = (spec.omega_max() / dw).ceil() as usize;
        if n > MAX_MODES {
            return Err(SimError::param(
                "t_max",
                format!("spectrum up to {:e} rad/s needs {n} modes at this duration", spec.omega_max()),
            ));
        }
        let omega: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) * dw).collect();
        let amp = omega
            .iter()
            .map(|&w| (spec.at(w) * dw / std::f64::consts::PI).max(0.0).sqrt())
            .collect();
        Ok(Self { omega, amp })
    }

    pub fn modes(&self) -> usize {
        self.omega.len()
    }

    /// Variance of δ implied by the discretised spectrum.
    pub fn variance(&self) -> f64 {
        self.amp.iter().map(|a| a * a).sum()
    }

    pub fn sample(&self, rng: &mut ShotRng) -> SynthTrace {
        let mut a = Vec::with_capacity(self.amp.len());
        let mut b = Vec::with_capacity(self.amp.len());
        for &s in &self.amp {
            let z1: f64 = StandardNormal.sample(rng);
            let z2: f64 = StandardNormal.sample(rng);
            a.push(s * z1);
            b.push(s * z2);
        }
        SynthTrace {
            omega: self.omega.clone(),
            a,
            b,
        }
    }
}

impl SynthTrace {
    pub fn omega_max(&self) -> f64 {
        self.omega.last().copied().unwrap_or(0.0)
    }

    pub fn value(&self, t: f64) -> f64 {
        self.omega
            .iter()
            .zip(self.a.iter().zip(&self.b))
            .map(|(&w, (&a, &b))| {
                let (s, c) = (w * t).sin_cos();
                a * c + b * s
            })
            .sum()
    }

    /// ∫ δ dt over [t0, t1], evaluated analytically.
    pub fn integral(&self, t0: f64, t1: f64) -> f64 {
        self.omega
            .iter()
            .zip(self.a.iter().zip(&self.b))
            .map(|(&w, (&a, &b))| {
                let (s0, c0) = (w * t0).sin_cos();
                let (s1, c1) = (w * t1).sin_cos();
                (a * (s1 - s0) - b * (c1 - c0)) / w
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::TabulatedSpectrum;
    use crate::rng::{stream, Purpose, StreamKey};

    fn flat(s0: f64, wmax: f64) -> NoiseModel {
        NoiseModel::Tabulated(TabulatedSpectrum::new(vec![0.0, wmax], vec![s0, s0]).unwrap())
    }

    #[test]
    fn variance_matches_spectrum() {
        // (1/π)∫ S dω for a flat band
        let syn = SpectrumSynth::new(&flat(2.0, 5000.0), 1e-2).unwrap();
        let expect = 2.0 * 5000.0 / std::f64::consts::PI;
        assert!((syn.variance() / expect - 1.0).abs() < 0.01);
        let n = 4000;
        let mut acc = 0.0;
        for s in 0..n {
            let tr = syn.sample(&mut stream(5, StreamKey::new(0, s), Purpose::Noise));
            acc += tr.value(3.3e-3).powi(2);
        }
        assert!((acc / n as f64 / expect - 1.0).abs() < 0.06);
    }

    #[test]
    fn integral_matches_quadrature() {
        let syn = SpectrumSynth::new(&flat(1.0, 2000.0), 5e-3).unwrap();
        let tr = syn.sample(&mut crate::rng::single(1));
        let (t0, t1) = (1e-3, 4e-3);
        let n = 20000;
        let h = (t1 - t0) / n as f64;
        let simpson: f64 = (0..=n)
            .map(|k| {
                let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
                w * tr.value(t0 + k as f64 * h)
            })
            .sum::<f64>()
            * h
            / 3.0;
        assert!((tr.integral(t0, t1) - simpson).abs() < 1e-9 * (1.0 + simpson.abs()));
    }

    #[test]
    fn rejects_parametric_models() {
        let e = SpectrumSynth::new(&NoiseModel::Ou { sigma: 1.0, tau_c: 1.0 }, 1.0).unwrap_err();
        assert_eq!(e.kind(), "unsupported_noise");
    }
}
