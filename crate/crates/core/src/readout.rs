//! Single-shot readout: photon counts in a window on f↓↓′ after optical
//! initialization, their histograms, and threshold fidelities.
//!
//! ↓ is the bright state. A shot is classified ↓ when its count exceeds the
//! threshold, so `f_down = P(n > k | ↓)` and `f_up = P(n ≤ k | ↑)`.

use crate::calibration::thermal_start;
use crate::config::SystemConfig;
use crate::engine::jump::{ES_DOWN, ES_UP, LB_DOWN, UB_DOWN, UB_UP};
use crate::engine::{expected_emissions, occupation_integral, propagate, simulate_window, Detector, LevelGraph, Transition, N_LEVELS};
use crate::error::{Result, SimError};
use crate::exec::Executor;
use crate::model::{rate_set, RateSet, Spin};
use crate::rng::{stream, Purpose, StreamKey};
use crate::sequence::init_transition;
use rand::Rng;
use serde::Serialize;

/// Photon count of one readout window starting in `init_level`, laser on
/// f↓↓′, ideal detector with collection efficiency `eta_collect`.
pub fn simulate_readout_window(init_level: usize, rates: &RateSet, window: f64, eta_collect: f64, seed: u64) -> Result<u64> {
    if !(window > 0.0) {
        return Err(SimError::param("window", format!("must be positive, got {window}")));
    }
    let g = LevelGraph::optical(rates, Some(Transition::Down))?;
    let mut rng = stream(seed, StreamKey::new(0, 0), Purpose::Shot);
    Ok(simulate_window(init_level, &g, window, &Detector::ideal(eta_collect), false, &mut rng)?.photons)
}

/// Count histograms for the two prepared states; bin `i` holds count
/// `bin_edges[i]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountHistogram {
    pub bin_edges: Vec<u64>,
    pub freq_down: Vec<u64>,
    pub freq_up: Vec<u64>,
    /// Shots per prepared state.
    pub n_shots: usize,
    pub window: f64,
}

impl CountHistogram {
    fn mean(&self, freq: &[u64]) -> f64 {
        let s: u64 = self.bin_edges.iter().zip(freq).map(|(c, f)| c * f).sum();
        s as f64 / self.n_shots as f64
    }

    pub fn mean_down(&self) -> f64 {
        self.mean(&self.freq_down)
    }

    pub fn mean_up(&self) -> f64 {
        self.mean(&self.freq_up)
    }

    pub fn max_count(&self) -> u64 {
        self.bin_edges.last().copied().unwrap_or(0)
    }

    /// `count,freq_down,freq_up`, one row per bin.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("count,freq_down,freq_up\n");
        for i in 0..self.bin_edges.len() {
            out.push_str(&format!("{},{},{}\n", self.bin_edges[i], self.freq_down[i], self.freq_up[i]));
        }
        out
    }
}

/// Exact tallies of two equally sized count samples.
pub fn build_histograms(counts_down: &[u64], counts_up: &[u64], window: f64) -> Result<CountHistogram> {
    if counts_down.is_empty() || counts_up.is_empty() {
        return Err(SimError::EmptyInput("readout counts"));
    }
    if counts_down.len() != counts_up.len() {
        return Err(SimError::DimensionMismatch {
            expected: counts_down.len(),
            got: counts_up.len(),
        });
    }
    if !(window > 0.0 && window.is_finite()) {
        return Err(SimError::param("window", format!("must be positive, got {window}")));
    }
    let max = counts_down.iter().chain(counts_up).copied().max().unwrap_or(0);
    let tally = |c: &[u64]| {
        let mut f = vec![0u64; max as usize + 1];
        for &n in c {
            f[n as usize] += 1;
        }
        f
    };
    Ok(CountHistogram {
        bin_edges: (0..=max).collect(),
        freq_down: tally(counts_down),
        freq_up: tally(counts_up),
        n_shots: counts_down.len(),
        window,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fidelity {
    pub f_down: f64,
    pub f_up: f64,
    pub f_avg: f64,
}

impl Fidelity {
    fn new(f_down: f64, f_up: f64) -> Self {
        Self {
            f_down,
            f_up,
            f_avg: 0.5 * (f_down + f_up),
        }
    }
}

/// Fidelities of the rule "↓ if n > threshold".
pub fn threshold_fidelity(hist: &CountHistogram, threshold: u64) -> Fidelity {
    let n = hist.n_shots as f64;
    let (mut above_down, mut below_up) = (0u64, 0u64);
    for (i, &c) in hist.bin_edges.iter().enumerate() {
        if c > threshold {
            above_down += hist.freq_down[i];
        } else {
            below_up += hist.freq_up[i];
        }
    }
    Fidelity::new(above_down as f64 / n, below_up as f64 / n)
}

/// Threshold maximizing f_avg; ties go to the smaller threshold.
pub fn optimal_threshold(hist: &CountHistogram) -> (u64, f64) {
    let mut best = (0, threshold_fidelity(hist, 0).f_avg);
    for k in 1..=hist.max_count() {
        let f = threshold_fidelity(hist, k).f_avg;
        if f > best.1 {
            best = (k, f);
        }
    }
    best
}

/// Fidelities for Poisson counts with means `n_down` and `n_up`.
pub fn poisson_fidelity(n_down: f64, n_up: f64, threshold: u64) -> Fidelity {
    let cdf = |mu: f64| {
        let (mut term, mut sum) = ((-mu).exp(), 0.0);
        for i in 0..=threshold {
            sum += term;
            term *= mu / (i + 1) as f64;
        }
        sum.min(1.0)
    };
    Fidelity::new(1.0 - cdf(n_down), cdf(n_up))
}

/// Readout counts for both prepared states: each shot starts from the
/// thermal spin mixture, is optically pumped for `init_time` (laser on the
/// transition that empties the unwanted state), then read out for `window`
/// with the laser on f↓↓′. Returns `(counts_down, counts_up)`.
pub fn simulate_counts(
    system: &SystemConfig,
    saturation: f64,
    init_time: f64,
    window: f64,
    shots: usize,
    seed: u64,
    exec: &Executor,
) -> Result<(Vec<u64>, Vec<u64>)> {
    if shots == 0 {
        return Err(SimError::param("shots", "must be at least 1"));
    }
    if !(window > 0.0) {
        return Err(SimError::param("window", format!("must be positive, got {window}")));
    }
    if !(init_time >= 0.0) {
        return Err(SimError::param("init_duration", format!("must be non-negative, got {init_time}")));
    }
    let p = &system.params;
    let r = rate_set(p, &system.field, system.temperature, saturation)?;
    let start = thermal_start(p, &system.field, system.temperature)?;
    let readout = LevelGraph::optical(&r, Some(Transition::Down))?;
    let inits = [
        LevelGraph::optical(&r, Some(init_transition(Spin::Down)))?,
        LevelGraph::optical(&r, Some(init_transition(Spin::Up)))?,
    ];
    let det = Detector {
        eta_collect: p.eta_collect,
        dark_rate: p.dark_count_rate,
        dead_time: p.dead_time,
    };
    let counts = exec.try_map(2 * shots, |n| -> Result<u64> {
        let (state, s) = (n / shots, n % shots);
        let mut rng = stream(seed, StreamKey::new(state, s), Purpose::Shot);
        // the thermal start only occupies the two lower-branch spin levels
        let mut level = if rng.random::<f64>() < start[LB_DOWN] { LB_DOWN } else { crate::engine::jump::LB_UP };
        if init_time > 0.0 {
            level = propagate(level, &inits[state], init_time, &mut rng)?;
        }
        Ok(simulate_window(level, &readout, window, &det, false, &mut rng)?.photons)
    })?;
    let up = counts[shots..].to_vec();
    let mut down = counts;
    down.truncate(shots);
    Ok((down, up))
}

/// Where a bright readout spends its time, and what emptying the
/// metastable upper branch (an ideal repump) would gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShelvingReport {
    /// Fraction of the window spent in the upper branch (dark, shelved).
    pub ub_fraction: f64,
    /// Fraction spent in the excited state.
    pub es_fraction: f64,
    /// Expected detected photons from a ↓ start.
    pub photons: f64,
    /// The same with the upper branch emptied instantly.
    pub photons_with_repump: f64,
}

/// Shelving diagnostic for a readout window on f↓↓′ starting in LB↓.
pub fn shelving_diagnostic(rates: &RateSet, window: f64, eta_collect: f64) -> Result<ShelvingReport> {
    if !(window > 0.0) {
        return Err(SimError::param("window", format!("must be positive, got {window}")));
    }
    let mut p0 = [0.0; N_LEVELS];
    p0[LB_DOWN] = 1.0;
    let g = LevelGraph::optical(rates, Some(Transition::Down))?;
    let (dwell, _) = occupation_integral(&g, &p0, window);
    let (emissions, _) = expected_emissions(&g, &p0, window);
    // a repump returns shelved population on the optical timescale
    let repumped = RateSet {
        gamma_ub: rates.gamma_ub.max(rates.gamma_optical),
        ..*rates
    };
    let gr = LevelGraph::optical(&repumped, Some(Transition::Down))?;
    let (emissions_r, _) = expected_emissions(&gr, &p0, window);
    Ok(ShelvingReport {
        ub_fraction: (dwell[UB_DOWN] + dwell[UB_UP]) / window,
        es_fraction: (dwell[ES_DOWN] + dwell[ES_UP]) / window,
        photons: emissions * eta_collect,
        photons_with_repump: emissions_r * eta_collect,
    })
}
