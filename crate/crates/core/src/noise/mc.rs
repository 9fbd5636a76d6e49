use super::synth::{SpectrumSynth, SynthTrace};
use super::{pulse_times, NoiseModel, OuState};
use crate::engine::FrequencyTrace;
use crate::error::{Result, SimError};
use crate::exec::Executor;
use crate::rng::{stream, Purpose, ShotRng, StreamKey};
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone)]
enum Component {
    Static(f64),
    Ou(OuState),
    Synth(SynthTrace),
}

/// Classical frequency offset δ(t) (rad/s) seen by one shot: the sum of all
/// classical noise sources, consumed forward in time.
#[derive(Debug, Clone)]
pub struct PhaseSource {
    parts: Vec<Component>,
    t: f64,
    rng: ShotRng,
}

/// Reusable per-experiment preparation (spectral synthesizers).
#[derive(Debug, Clone)]
pub struct PhasePlan {
    models: Vec<(NoiseModel, Option<SpectrumSynth>)>,
}

impl PhasePlan {
    /// `t_max` bounds the longest sequence the sources will be asked to cover.
    /// Quantum (¹³C) models are not classical phase noise and are skipped.
    pub fn new(models: &[NoiseModel], t_max: f64) -> Result<Self> {
        let mut out = Vec::new();
        for m in models {
            m.validate()?;
            match m {
                NoiseModel::SingleC13 { .. } => {}
                NoiseModel::Tabulated(_) => out.push((m.clone(), Some(SpectrumSynth::new(m, t_max)?))),
                _ => out.push((m.clone(), None)),
            }
        }
        Ok(Self { models: out })
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    /// Draws one shot's realisation.
    pub fn source(&self, mut rng: ShotRng) -> PhaseSource {
        let parts = self
            .models
            .iter()
            .map(|(m, syn)| match (m, syn) {
                (NoiseModel::QuasiStatic { sigma }, _) => {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    Component::Static(sigma * z)
                }
                (NoiseModel::Ou { sigma, tau_c }, _) => Component::Ou(OuState::stationary(*sigma, *tau_c, &mut rng)),
                (_, Some(s)) => Component::Synth(s.sample(&mut rng)),
                _ => unreachable!("quantum models are filtered in PhasePlan::new"),
            })
            .collect();
        PhaseSource { parts, t: 0.0, rng }
    }
}

impl PhaseSource {
    /// Adds a fixed offset (rad/s), e.g. a per-shot g-factor draw.
    pub fn with_static(mut self, delta: f64) -> Self {
        self.parts.push(Component::Static(delta));
        self
    }

    pub fn is_silent(&self) -> bool {
        self.parts.iter().all(|p| matches!(p, Component::Static(d) if *d == 0.0))
    }

    /// Longest sample-and-hold interval that still resolves every
    /// component's time variation (infinite for static offsets).
    pub fn hold_step(&self) -> f64 {
        self.parts
            .iter()
            .map(|p| match p {
                Component::Static(_) => f64::INFINITY,
                Component::Ou(st) => st.tau() / 50.0,
                Component::Synth(tr) => 0.1 * crate::constants::TAU / tr.omega_max().max(f64::MIN_POSITIVE),
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// Accumulated phase ∫δ dt over the next `h` seconds (exact for every source).
    pub fn advance(&mut self, h: f64) -> f64 {
        if h <= 0.0 {
            return 0.0;
        }
        let t0 = self.t;
        let mut phi = 0.0;
        for p in &mut self.parts {
            phi += match p {
                Component::Static(d) => *d * h,
                Component::Ou(st) => st.advance(h, &mut self.rng),
                Component::Synth(tr) => tr.integral(t0, t0 + h),
            };
        }
        self.t += h;
        phi
    }

    /// Sample-and-hold trace covering the next `h` seconds with step ≤ `dt`,
    /// each sample being the interval average so the total phase is exact.
    pub fn trace(&mut self, h: f64, dt: f64) -> FrequencyTrace {
        let n = ((h / dt).ceil() as usize).max(1);
        let step = h / n as f64;
        let values = (0..n).map(|_| self.advance(step) / step).collect();
        FrequencyTrace { dt: step, values }
    }
}

/// Monte Carlo CPMG coherence W = ⟨cos φ⟩ with ideal instantaneous π pulses,
/// one value per entry of `total_times`. Point `i`, shot `s` draws its noise
/// from the `(seed, i, s)` noise stream.
pub fn mc_coherence(
    models: &[NoiseModel],
    n_pulses: usize,
    total_times: &[f64],
    shots: usize,
    seed: u64,
    exec: &Executor,
) -> Result<Vec<f64>> {
    if shots == 0 {
        return Err(SimError::EmptyInput("shots"));
    }
    if models.iter().any(|m| matches!(m, NoiseModel::SingleC13 { .. })) {
        return Err(SimError::UnsupportedNoise {
            model: "SingleC13",
            operation: "mc_coherence",
        });
    }
    let t_max = total_times.iter().cloned().fold(0.0, f64::max);
    if total_times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(SimError::param("total_time", "must be finite and non-negative"));
    }
    let plan = PhasePlan::new(models, t_max.max(1e-12))?;
    let per_point: Vec<f64> = total_times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let mut edges = vec![0.0];
            edges.extend(pulse_times(n_pulses, t));
            edges.push(t);
            let vals = exec.map(shots, |s| {
                let mut src = plan.source(stream(seed, StreamKey::new(i, s), Purpose::Noise));
                let mut phi = 0.0;
                let mut sign = 1.0;
                for w in edges.windows(2) {
                    phi += sign * src.advance(w[1] - w[0]);
                    sign = -sign;
                }
                phi.cos()
            });
            vals.iter().sum::<f64>() / shots as f64
        })
        .collect();
    Ok(per_point)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{coherence_decay, TabulatedSpectrum};

    #[test]
    fn quasistatic_is_refocused_by_echo() {
        let m = [NoiseModel::QuasiStatic { sigma: 3e4 }];
        let w = mc_coherence(&m, 1, &[1e-4, 1e-3], 200, 1, &Executor::Sequential).unwrap();
        for v in w {
            assert!((v - 1.0).abs() < 1e-9);
        }
        let fid = mc_coherence(&m, 0, &[5e-5], 4000, 1, &Executor::Sequential).unwrap()[0];
        let expect = (-0.5f64 * (3e4 * 5e-5f64).powi(2)).exp();
        assert!((fid - expect).abs() < 0.03);
    }

    #[test]
    fn ou_matches_filter_function() {
        let m = NoiseModel::Ou { sigma: 2e4, tau_c: 2e-5 };
        for n in [1usize, 2, 4] {
            let times = [5e-5, 1.5e-4, 4e-4];
            let mc = mc_coherence(std::slice::from_ref(&m), n, &times, 20_000, 9, &Executor::Parallel).unwrap();
            for (t, w) in times.iter().zip(mc) {
                let ff = coherence_decay(&m, n, *t).unwrap();
                assert!((w - ff).abs() < 0.02, "N={n} T={t}: mc {w} ff {ff}");
            }
        }
    }

    #[test]
    fn tabulated_matches_filter_function() {
        let wc = 1000.0f64;
        let omega: Vec<f64> = (0..=400).map(|k| k as f64 * 10.0).collect();
        let s: Vec<f64> = omega.iter().map(|w| 1.58e7 * (-(w / wc).powi(2)).exp()).collect();
        let m = NoiseModel::Tabulated(TabulatedSpectrum::new(omega, s).unwrap());
        let times = [2e-4, 5e-4, 1e-3];
        let mc = mc_coherence(std::slice::from_ref(&m), 2, &times, 2000, 4, &Executor::Parallel).unwrap();
        for (t, w) in times.iter().zip(mc) {
            let ff = coherence_decay(&m, 2, *t).unwrap();
            assert!((w - ff).abs() < 0.03, "T={t}: mc {w} ff {ff}");
        }
    }

    #[test]
    fn worker_count_does_not_change_result() {
        let m = [NoiseModel::Ou { sigma: 1e4, tau_c: 1e-4 }];
        let a = mc_coherence(&m, 2, &[3e-4], 500, 3, &Executor::Sequential).unwrap();
        let b = mc_coherence(&m, 2, &[3e-4], 500, 3, &Executor::Workers(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn trace_preserves_phase() {
        let plan = PhasePlan::new(&[NoiseModel::Ou { sigma: 1e5, tau_c: 1e-6 }], 1e-5).unwrap();
        let mut a = plan.source(crate::rng::single(2));
        let mut b = plan.source(crate::rng::single(2));
        let tr = a.trace(1e-6, 1e-7);
        let phi: f64 = tr.values.iter().map(|v| v * tr.dt).sum();
        let direct: f64 = (0..10).map(|_| b.advance(1e-7)).sum();
        assert!((phi - direct).abs() < 1e-12);
    }
}
