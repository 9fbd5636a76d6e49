//! Shot-by-shot execution.
//!
//! The qubit is carried as a density matrix (2×2, or 4×4 with a ¹³C
//! ancilla) through MW pulses and waits; every laser segment collapses it
//! onto a spin state and hands over to the six-level jump process, whose
//! final level is mapped back to a qubit state of the same spin.

use super::{LaserRole, PulseSegment, PulseSequence, SweepAxis};
use super::table::DataTable;
use crate::config::SystemConfig;
use crate::engine::jump::{LB_DOWN, LB_UP};
use crate::engine::{first_passage, mean_first_passage, mw_unitary, propagate, simulate_window, unitary, CMatrix, Detector, LevelGraph, LevelSet, Transition};
use crate::error::{Result, SimError};
use crate::exec::Executor;
use crate::model::{boltzmann_factor, level_diagram, rate_set_from, FieldConfig, RateSet, Spin};
use crate::noise::{c13_hamiltonian, NoiseModel, PhasePlan, PhaseSource};
use crate::rng::{stream, Purpose, ShotRng, StreamKey};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// What one shot leaves behind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotOutcome {
    pub photons: u64,
    pub bright: bool,
    /// ↓ population just before readout, free of readout noise.
    pub p_down: f64,
}

/// Stream id of a sweep point, derived from its value so that permuting the
/// sweep permutes rows without changing them.
fn point_id(value: f64) -> usize {
    let b = value.to_bits();
    ((b ^ (b >> 32)) & 0xffff_ffff) as usize
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn spin_of(level: usize) -> Spin {
    if level % 2 == 1 {
        Spin::Up
    } else {
        Spin::Down
    }
}

fn level_of(spin: Spin) -> usize {
    match spin {
        Spin::Up => LB_UP,
        Spin::Down => LB_DOWN,
    }
}

/// Everything about a sweep point that does not change from shot to shot.
struct Point {
    segments: Vec<PulseSegment>,
    frame: f64,
    graphs: Vec<Option<LevelGraph>>,
}

struct Context<'a> {
    seq: &'a PulseSequence,
    dark: RateSet,
    detector: Detector,
    p_up_thermal: f64,
    /// ¹³C Hamiltonian (Hz) on electron ⊗ nucleus, if any.
    c13: Option<CMatrix>,
    plan: PhasePlan,
    dt: f64,
    seed: u64,
}

/// Qubit (⊗ ancilla) state; electron basis (↑, ↓), ancilla dimension `k`.
struct Qubit {
    rho: CMatrix,
    k: usize,
}

impl Qubit {
    fn with_spin(spin: Spin, k: usize) -> Self {
        let p_up = if spin == Spin::Up { 1.0 } else { 0.0 };
        Self::mixed(p_up, k)
    }

    fn mixed(p_up: f64, k: usize) -> Self {
        let n = 2 * k;
        let rho = CMatrix::from_fn(n, n, |i, j| {
            if i != j {
                c(0.0)
            } else if i < k {
                c(p_up / k as f64)
            } else {
                c((1.0 - p_up) / k as f64)
            }
        });
        Self { rho, k }
    }

    fn p_down(&self) -> f64 {
        (self.k..2 * self.k).map(|i| self.rho[(i, i)].re).sum::<f64>().clamp(0.0, 1.0)
    }

    fn collapse(&self, rng: &mut ShotRng) -> Spin {
        if rng.random::<f64>() < self.p_down() {
            Spin::Down
        } else {
            Spin::Up
        }
    }

    fn transform(&mut self, u: &CMatrix) {
        self.rho = u * &self.rho * u.adjoint();
    }

    /// Free-evolution channel for `t` seconds: electron phase `phi` (rad),
    /// T₁ relaxation towards the thermal populations, and phonon dephasing.
    /// Exact for the generalised amplitude-damping plus pure-dephasing
    /// Lindbladian; both commute with the phase rotation.
    fn relax(&mut self, t: f64, phi: f64, r: &RateSet) {
        let k = self.k;
        let g1 = r.t1_down + r.t1_up;
        let decay = (-g1 * t).exp();
        let up_inf = if g1 > 0.0 { r.t1_up / g1 } else { 0.0 };
        let coh = Complex64::from_polar((-(0.5 * g1 + r.gamma_plus) * t).exp(), -phi);
        let mut out = self.rho.clone();
        for i in 0..k {
            for j in 0..k {
                let (a, b) = (self.rho[(i, j)], self.rho[(k + i, k + j)]);
                let tot = a + b;
                out[(i, j)] = a * c(decay) + tot * c((1.0 - decay) * up_inf);
                out[(k + i, k + j)] = b * c(decay) + tot * c((1.0 - decay) * (1.0 - up_inf));
                out[(i, k + j)] = self.rho[(i, k + j)] * coh;
                out[(k + i, j)] = self.rho[(k + i, j)] * coh.conj();
            }
        }
        self.rho = out;
    }
}

/// Hz Hamiltonian of the drive plus a σ_z offset (rad/s) on electron ⊗ ancilla.
fn drive_hamiltonian(rabi: f64, detuning_hz: f64, phase: f64, k: usize) -> CMatrix {
    let hx = 0.5 * rabi * phase.cos();
    let hy = 0.5 * rabi * phase.sin();
    let hz = 0.5 * detuning_hz;
    let q = CMatrix::from_row_slice(2, 2, &[c(hz), Complex64::new(hx, -hy), Complex64::new(hx, hy), c(-hz)]);
    q.kronecker(&CMatrix::identity(k, k))
}

impl Context<'_> {
    fn graph(&self, system: &SystemConfig, d: &crate::model::LevelDiagram, seg: &PulseSegment) -> Result<Option<LevelGraph>> {
        match *seg {
            PulseSegment::LaserPulse { transition, saturation, .. } => {
                let r = rate_set_from(&system.params, d, system.temperature, saturation)?;
                Ok(Some(LevelGraph::optical(&r, Some(transition))?))
            }
            _ => Ok(None),
        }
    }

    fn mw(&self, q: &mut Qubit, src: &mut PhaseSource, rabi: f64, detuning: f64, phase: f64, duration: f64) -> Result<()> {
        if duration == 0.0 {
            return Ok(());
        }
        let step = src.hold_step().max(self.dt).min(duration);
        let silent = src.is_silent();
        match &self.c13 {
            None => {
                let trace = (!silent).then(|| src.trace(duration, step));
                let u = mw_unitary(rabi, detuning, phase, duration, trace.as_ref())?;
                q.transform(&u);
            }
            Some(hc) => {
                let n = ((duration / step).ceil() as usize).max(1);
                let h = duration / n as f64;
                for _ in 0..n {
                    let offset = if silent { 0.0 } else { src.advance(h) / h };
                    let total = drive_hamiltonian(rabi, detuning + offset / crate::constants::TAU, phase, q.k) + hc;
                    q.transform(&unitary(&total, h));
                }
            }
        }
        q.relax(duration, 0.0, &self.dark);
        Ok(())
    }

    fn wait(&self, q: &mut Qubit, src: &mut PhaseSource, frame: f64, duration: f64) {
        if duration == 0.0 {
            return;
        }
        let phi = crate::constants::TAU * frame * duration + src.advance(duration);
        if let Some(hc) = &self.c13 {
            q.transform(&unitary(hc, duration));
        }
        q.relax(duration, phi, &self.dark);
    }

    fn shot(&self, p: &Point, pid: usize, shot: usize) -> Result<ShotOutcome> {
        let key = StreamKey::new(pid, shot);
        let mut rng = stream(self.seed, key, Purpose::Shot);
        let mut src = self.plan.source(stream(self.seed, key, Purpose::Noise));
        let k = if self.c13.is_some() { 2 } else { 1 };
        let mut q = Qubit::mixed(self.p_up_thermal, k);
        let err = (self.seq.pulse_error > 0.0).then(|| Normal::new(0.0, self.seq.pulse_error).expect("validated"));
        let mut out = ShotOutcome {
            photons: 0,
            bright: false,
            p_down: f64::NAN,
        };
        for (i, seg) in p.segments.iter().enumerate() {
            let res: Result<()> = (|| {
                match *seg {
                    PulseSegment::MwPulse {
                        rabi,
                        detuning,
                        phase,
                        duration,
                    } => {
                        let scale = err.map_or(1.0, |n| (1.0 + n.sample(&mut rng)).max(0.0));
                        self.mw(&mut q, &mut src, rabi, detuning, phase, duration * scale)?;
                    }
                    PulseSegment::Wait { duration } => self.wait(&mut q, &mut src, p.frame, duration),
                    PulseSegment::LaserPulse { duration, role, .. } => {
                        let g = p.graphs[i].as_ref().expect("laser segments have graphs");
                        let level = level_of(q.collapse(&mut rng));
                        if role == LaserRole::Readout {
                            out.p_down = q.p_down();
                            let w = if duration > 0.0 {
                                simulate_window(level, g, duration, &self.detector, false, &mut rng)?
                            } else {
                                Default::default()
                            };
                            out.photons = w.photons;
                            out.bright = w.photons > self.seq.threshold;
                            q = Qubit::with_spin(spin_of(if duration > 0.0 { w.final_level } else { level }), k);
                        } else {
                            let fin = if duration > 0.0 { propagate(level, g, duration, &mut rng)? } else { level };
                            q = Qubit::with_spin(spin_of(fin), k);
                        }
                    }
                }
                Ok(())
            })();
            res.map_err(|e| e.in_segment(i))?;
        }
        Ok(out)
    }
}

/// Runs every shot of every sweep point and tabulates the readout.
///
/// Columns: `sweep`, `mean` (bright fraction), `err` (binomial), `bright`
/// (bright-shot count), `photons` (total), `p_down` (mean ↓ population
/// before readout). Shot `s` of a point draws from the `(seed, point, s)`
/// streams, so the table is independent of the executor.
pub fn run_experiment(
    seq: &PulseSequence,
    system: &SystemConfig,
    noise: &[NoiseModel],
    seed: u64,
    dt: f64,
    exec: &Executor,
) -> Result<DataTable> {
    seq.validate()?;
    system.params.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SimError::param("dt", format!("must be positive, got {dt}")));
    }
    let d = level_diagram(&system.params, &system.field)?;
    let dark = rate_set_from(&system.params, &d, system.temperature, 0.0)?;
    let c13s: Vec<CMatrix> = noise
        .iter()
        .filter_map(|m| match m {
            NoiseModel::SingleC13 { a_par, a_perp, b_mag } => Some(c13_hamiltonian(*a_par, *a_perp, *b_mag)),
            _ => None,
        })
        .collect();
    if c13s.len() > 1 {
        return Err(SimError::UnsupportedNoise {
            model: "SingleC13",
            operation: "more than one nuclear spin in run_experiment",
        });
    }
    let t_max = seq.max_coherent_time(d.f_qubit)?.max(dt);
    let x = if d.f_qubit > 0.0 { boltzmann_factor(d.f_qubit, system.temperature) } else { 1.0 };
    let ctx = Context {
        seq,
        dark,
        detector: Detector {
            eta_collect: system.params.eta_collect,
            dark_rate: system.params.dark_count_rate,
            dead_time: system.params.dead_time,
        },
        p_up_thermal: x / (1.0 + x),
        c13: c13s.into_iter().next(),
        plan: PhasePlan::new(noise, t_max)?,
        dt,
        seed,
    };
    let mut points = Vec::with_capacity(seq.sweep.values.len());
    for &v in &seq.sweep.values {
        let (segments, frame) = seq.resolve(v, d.f_qubit)?;
        let graphs = segments
            .iter()
            .enumerate()
            .map(|(i, s)| ctx.graph(system, &d, s).map_err(|e| e.in_segment(i)))
            .collect::<Result<_>>()?;
        points.push(Point { segments, frame, graphs });
    }
    let shots = seq.shots_per_point;
    let results = exec.try_map(points.len() * shots, |n| {
        let (i, s) = (n / shots, n % shots);
        ctx.shot(&points[i], point_id(seq.sweep.values[i]), s)
    })?;

    let mut t = DataTable::new(&seq.sweep.name);
    for (i, &v) in seq.sweep.values.iter().enumerate() {
        let chunk = &results[i * shots..(i + 1) * shots];
        let bright = chunk.iter().filter(|o| o.bright).count();
        let photons: u64 = chunk.iter().map(|o| o.photons).sum();
        let p_down = chunk.iter().map(|o| o.p_down).sum::<f64>() / shots as f64;
        let m = bright as f64 / shots as f64;
        t.push_row(&[v, m, (m * (1.0 - m) / shots as f64).sqrt(), bright as f64, photons as f64, p_down]);
    }
    t.meta.insert("seed".into(), seed.to_string());
    t.meta.insert("shots_per_point".into(), shots.to_string());
    t.meta.insert("f_qubit_hz".into(), crate::config::format_number(d.f_qubit));
    if let SweepAxis::MwFrequency { .. } = seq.sweep.axis {
        t.meta.insert("sweep_unit".into(), "Hz".into());
    } else {
        t.meta.insert("sweep_unit".into(), "s".into());
    }
    Ok(t)
}

/// One field configuration of the pumping experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpingCase {
    pub alpha: f64,
    pub b_mag: f64,
}

/// Spin-pumping times: for each case, `trajectories` jump-process runs
/// start in LB↓ with the laser on f↓↓′ and stop on reaching LB↑.
///
/// Columns: `alpha`, `b_mag`, `mean` (sample mean time), `err` (standard
/// error), `exact` (mean first-passage time from the generator).
pub fn run_pumping(
    cases: &[PumpingCase],
    system: &SystemConfig,
    saturation: f64,
    trajectories: usize,
    seed: u64,
    exec: &Executor,
) -> Result<DataTable> {
    if cases.is_empty() {
        return Err(SimError::EmptyInput("pumping cases"));
    }
    if trajectories == 0 {
        return Err(SimError::param("trajectories", "must be at least 1"));
    }
    let mut graphs = Vec::new();
    for c in cases {
        let field = FieldConfig::new(c.b_mag, c.alpha)?;
        let d = level_diagram(&system.params, &field)?;
        let r = rate_set_from(&system.params, &d, system.temperature, saturation)?;
        let g = LevelGraph::optical(&r, Some(Transition::Down))?;
        let exact = mean_first_passage(&g, LB_DOWN, LevelSet::of(&[LB_UP]))?;
        graphs.push((g, exact));
    }
    let target = LevelSet::of(&[LB_UP]);
    let times = exec.try_map(cases.len() * trajectories, |n| {
        let (i, s) = (n / trajectories, n % trajectories);
        let (g, exact) = &graphs[i];
        let mut rng = stream(seed, StreamKey::new(i, s), Purpose::Trajectory);
        // 200 mean times: an exponential survives that long with p ≈ e⁻²⁰⁰
        let hit = first_passage(LB_DOWN, g, target, 200.0 * exact, &mut rng)?;
        hit.ok_or_else(|| SimError::param("trajectories", "a trajectory did not pump within 200 mean times"))
    })?;
    let mut t = DataTable::with_columns(&["alpha", "b_mag", "mean", "err", "exact"]);
    for (i, c) in cases.iter().enumerate() {
        let ts = &times[i * trajectories..(i + 1) * trajectories];
        let n = ts.len() as f64;
        let mean = ts.iter().sum::<f64>() / n;
        let var = if ts.len() > 1 { ts.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        t.push_row(&[c.alpha, c.b_mag, mean, (var / n).sqrt(), graphs[i].1]);
    }
    t.meta.insert("seed".into(), seed.to_string());
    t.meta.insert("trajectories".into(), trajectories.to_string());
    Ok(t)
}
