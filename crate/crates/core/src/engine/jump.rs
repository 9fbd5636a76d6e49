//! Classical jump process over the six optical levels.
//!
//! Under strong driving a bright state spends almost all its time cycling
//! a → a′ → a, with an occasional detour a → a′ → c → a through a
//! metastable level c. Instead of drawing ~10⁵ such loops one by one, runs
//! of self-returning loops are sampled as a block: the number of loops
//! before any other event is geometric, the number of detours among them is
//! binomial, and the total dwell in each of the three states is Gamma
//! distributed. When a block straddles the end of the window, the number of
//! completed loops is found by bisection, splitting detour counts
//! hypergeometrically and dwell totals with Beta draws (the per-loop dwells
//! given their sum are Dirichlet). The result has the same law as a naive
//! Gillespie simulation, which [`jump_trajectory`] still implements for
//! full records and cross-checks.

use crate::error::{Result, SimError};
use crate::model::RateSet;
use crate::rng::{self, Purpose, ShotRng, StreamKey};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Beta, Binomial, Distribution, Gamma, Hypergeometric, Poisson};
use serde::{Deserialize, Serialize};

pub const N_LEVELS: usize = 6;
pub const LB_DOWN: usize = 0;
pub const LB_UP: usize = 1;
pub const UB_DOWN: usize = 2;
pub const UB_UP: usize = 3;
pub const ES_DOWN: usize = 4;
pub const ES_UP: usize = 5;

pub const LEVEL_NAMES: [&str; N_LEVELS] = ["LB_down", "LB_up", "UB_down", "UB_up", "ES_down", "ES_up"];

/// Optical transition addressed by the laser.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transition {
    /// f↓↓′: LB↓ ↔ LB′↓.
    Down,
    /// f↑↑′: LB↑ ↔ LB′↑.
    Up,
}

/// Bit set of level indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LevelSet(u8);

impl LevelSet {
    pub fn of(levels: &[usize]) -> Self {
        Self(levels.iter().fold(0, |m, &l| m | (1 << l)))
    }
    pub fn contains(self, level: usize) -> bool {
        self.0 & (1 << level) != 0
    }
}

/// Photon detection chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detector {
    pub eta_collect: f64,
    pub dark_rate: f64,
    pub dead_time: f64,
}

impl Detector {
    pub fn ideal(eta_collect: f64) -> Self {
        Self {
            eta_collect,
            dark_rate: 0.0,
            dead_time: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta_collect) {
            return Err(SimError::param("eta_collect", format!("must lie in [0, 1], got {}", self.eta_collect)));
        }
        if !(self.dark_rate >= 0.0 && self.dark_rate.is_finite()) {
            return Err(SimError::param("dark_count_rate", "must be non-negative"));
        }
        if !(self.dead_time >= 0.0 && self.dead_time.is_finite()) {
            return Err(SimError::param("dead_time", "must be non-negative"));
        }
        Ok(())
    }

    fn needs_times(&self) -> bool {
        self.dead_time > 0.0
    }
}

/// Transition rates `rates[i][j]` (s⁻¹) for i → j, plus which transitions emit a photon.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelGraph {
    rates: [[f64; N_LEVELS]; N_LEVELS],
    radiative: [[bool; N_LEVELS]; N_LEVELS],
    total: [f64; N_LEVELS],
    /// Bright loop used for block sampling, per starting level.
    cycle: [Option<Cycle>; N_LEVELS],
}

/// Loops are only block-sampled when they dominate the dynamics.
const LOOP_THRESHOLD: f64 = 0.5;

/// Self-returning loops from a level `a`: a → b → a with probability `p1`
/// and a → b → c → a with probability `p2`. Each loop emits exactly one
/// photon, on leaving b.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Cycle {
    b: usize,
    c: Option<usize>,
    p1: f64,
    p2: f64,
}

impl LevelGraph {
    pub fn new(rates: [[f64; N_LEVELS]; N_LEVELS], radiative: [[bool; N_LEVELS]; N_LEVELS]) -> Result<Self> {
        let mut r = rates;
        for (i, row) in r.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                if !(*v >= 0.0 && v.is_finite()) {
                    return Err(SimError::param("rate", format!("rate {i}→{j} must be non-negative and finite, got {v}")));
                }
                if i == j {
                    *v = 0.0;
                }
            }
        }
        let total = std::array::from_fn(|i| r[i].iter().sum());
        let mut g = Self {
            rates: r,
            radiative,
            total,
            cycle: [None; N_LEVELS],
        };
        for a in 0..N_LEVELS {
            for b in 0..N_LEVELS {
                if a == b || !g.radiative[b][a] || g.radiative[a][b] || g.rates[a][b] == 0.0 {
                    continue;
                }
                let p1 = g.prob(a, b) * g.prob(b, a);
                let detour = (0..N_LEVELS)
                    .filter(|&c| c != a && c != b && g.radiative[b][c] && !g.radiative[c][a])
                    .map(|c| (c, g.prob(b, c) * g.prob(c, a)))
                    .filter(|(_, p)| *p > 0.0)
                    .max_by(|x, y| x.1.total_cmp(&y.1));
                let p2 = detour.map_or(0.0, |(_, p)| g.prob(a, b) * p);
                let cyc = Cycle {
                    b,
                    c: detour.map(|(c, _)| c),
                    p1,
                    p2,
                };
                if p1 + p2 >= LOOP_THRESHOLD && g.cycle[a].is_none_or(|q| p1 + p2 > q.p1 + q.p2) {
                    g.cycle[a] = Some(cyc);
                }
            }
        }
        Ok(g)
    }

    /// The six-level optical graph with the laser on `laser` (or off).
    pub fn optical(r: &RateSet, laser: Option<Transition>) -> Result<Self> {
        let mut k = [[0.0; N_LEVELS]; N_LEVELS];
        let mut rad = [[false; N_LEVELS]; N_LEVELS];
        match laser {
            Some(Transition::Down) => {
                k[LB_DOWN][ES_DOWN] = r.r_scatter;
                k[LB_UP][ES_UP] = r.r_off;
            }
            Some(Transition::Up) => {
                k[LB_UP][ES_UP] = r.r_scatter;
                k[LB_DOWN][ES_DOWN] = r.r_off;
            }
            None => {}
        }
        let g = r.gamma_optical;
        let b = r.branch_ub;
        for (es, eta, same_lb, other_lb, same_ub, other_ub) in [
            (ES_DOWN, r.eta_down, LB_DOWN, LB_UP, UB_DOWN, UB_UP),
            (ES_UP, r.eta_up, LB_UP, LB_DOWN, UB_UP, UB_DOWN),
        ] {
            k[es][same_lb] = g * (1.0 - b) * eta;
            k[es][other_lb] = g * (1.0 - b) * (1.0 - eta);
            k[es][same_ub] = g * b * eta;
            k[es][other_ub] = g * b * (1.0 - eta);
            for to in 0..4 {
                rad[es][to] = true;
            }
        }
        k[UB_DOWN][LB_DOWN] = r.gamma_ub;
        k[UB_UP][LB_UP] = r.gamma_ub;
        k[LB_DOWN][UB_DOWN] = r.gamma_plus;
        k[LB_UP][UB_UP] = r.gamma_plus;
        k[LB_UP][LB_DOWN] = r.t1_down;
        k[LB_DOWN][LB_UP] = r.t1_up;
        Self::new(k, rad)
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.rates[from][to]
    }

    pub fn total_rate(&self, level: usize) -> f64 {
        self.total[level]
    }

    pub fn is_radiative(&self, from: usize, to: usize) -> bool {
        self.radiative[from][to]
    }

    /// Jump probability i → j given that i is left.
    pub fn prob(&self, i: usize, j: usize) -> f64 {
        if self.total[i] > 0.0 {
            self.rates[i][j] / self.total[i]
        } else {
            0.0
        }
    }

    /// Emission rate (all radiative channels) out of each level.
    pub fn emission_rates(&self) -> [f64; N_LEVELS] {
        std::array::from_fn(|i| (0..N_LEVELS).filter(|&j| self.radiative[i][j]).map(|j| self.rates[i][j]).sum())
    }

    /// Row-convention generator: d p/dt = p·Q.
    pub fn generator(&self) -> DMatrix<f64> {
        DMatrix::from_fn(N_LEVELS, N_LEVELS, |i, j| if i == j { -self.total[i] } else { self.rates[i][j] })
    }

    fn check_level(level: usize) -> Result<()> {
        if level >= N_LEVELS {
            return Err(SimError::UnknownLevel { index: level, levels: N_LEVELS });
        }
        Ok(())
    }
}

/// Full record of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub jump_times: Vec<f64>,
    /// Initial level followed by the level entered at each jump.
    pub level_path: Vec<usize>,
    pub photon_times: Vec<f64>,
    /// Radiative decays before collection thinning.
    pub emissions: u64,
    pub duration: f64,
}

impl TrajectoryRecord {
    pub fn final_level(&self) -> usize {
        *self.level_path.last().expect("path starts with the initial level")
    }
}

fn exp_sample(rng: &mut ShotRng, rate: f64) -> f64 {
    // 1 − U ∈ (0, 1] keeps the logarithm finite
    -(1.0 - rng.random::<f64>()).ln() / rate
}

fn pick(g: &LevelGraph, from: usize, exclude: LevelSet, rng: &mut ShotRng) -> usize {
    let excl: f64 = (0..N_LEVELS).filter(|&e| exclude.contains(e)).map(|e| g.rates[from][e]).sum();
    let mut u = rng.random::<f64>() * (g.total[from] - excl);
    let mut last = from;
    for j in 0..N_LEVELS {
        let r = g.rates[from][j];
        if exclude.contains(j) || r == 0.0 {
            continue;
        }
        last = j;
        if u < r {
            return j;
        }
        u -= r;
    }
    last
}

/// Naive Gillespie simulation with a complete record.
pub fn jump_trajectory(initial_level: usize, graph: &LevelGraph, duration: f64, eta_collect: f64, rng_seed: u64) -> Result<TrajectoryRecord> {
    let mut rng = rng::stream(rng_seed, StreamKey::new(0, 0), Purpose::Trajectory);
    jump_trajectory_with(initial_level, graph, duration, &Detector::ideal(eta_collect), &mut rng)
}

pub fn jump_trajectory_with(
    initial_level: usize,
    graph: &LevelGraph,
    duration: f64,
    detector: &Detector,
    rng: &mut ShotRng,
) -> Result<TrajectoryRecord> {
    LevelGraph::check_level(initial_level)?;
    detector.validate()?;
    check_duration(duration)?;
    let mut rec = TrajectoryRecord {
        jump_times: Vec::new(),
        level_path: vec![initial_level],
        photon_times: Vec::new(),
        emissions: 0,
        duration,
    };
    let mut t = 0.0;
    let mut level = initial_level;
    loop {
        let total = graph.total[level];
        if total == 0.0 {
            break;
        }
        let dt = exp_sample(rng, total);
        if t + dt >= duration {
            break;
        }
        t += dt;
        let next = pick(graph, level, LevelSet::default(), rng);
        if graph.radiative[level][next] {
            rec.emissions += 1;
            if rng.random::<f64>() < detector.eta_collect {
                rec.photon_times.push(t);
            }
        }
        rec.jump_times.push(t);
        rec.level_path.push(next);
        level = next;
    }
    rec.photon_times = finish_detection(rec.photon_times, detector, duration, rng);
    Ok(rec)
}

fn check_duration(duration: f64) -> Result<()> {
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(SimError::param("duration", format!("must be non-negative and finite, got {duration}")));
    }
    Ok(())
}

/// Adds dark counts and applies detector dead time to sorted photon times.
fn finish_detection(mut times: Vec<f64>, detector: &Detector, duration: f64, rng: &mut ShotRng) -> Vec<f64> {
    if detector.dark_rate > 0.0 && duration > 0.0 {
        let n = poisson(rng, detector.dark_rate * duration);
        for _ in 0..n {
            times.push(rng.random::<f64>() * duration);
        }
        times.sort_by(f64::total_cmp);
    }
    if detector.dead_time > 0.0 {
        let mut kept: Vec<f64> = Vec::with_capacity(times.len());
        for t in times {
            if kept.last().is_none_or(|&last| t - last >= detector.dead_time) {
                kept.push(t);
            }
        }
        times = kept;
    }
    times
}

fn poisson(rng: &mut ShotRng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|d| d.sample(rng) as u64).unwrap_or(0)
}

fn binomial(rng: &mut ShotRng, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).map(|d| d.sample(rng)).unwrap_or(0)
}

fn gamma(rng: &mut ShotRng, shape: f64, rate: f64) -> f64 {
    if shape <= 0.0 {
        return 0.0;
    }
    Gamma::new(shape, 1.0 / rate).map(|d| d.sample(rng)).unwrap_or(shape / rate)
}

fn beta(rng: &mut ShotRng, a: f64, b: f64) -> f64 {
    if b <= 0.0 {
        return 1.0;
    }
    if a <= 0.0 {
        return 0.0;
    }
    Beta::new(a, b).map(|d| d.sample(rng)).unwrap_or(a / (a + b))
}

/// A run of `count` consecutive loops starting at `start`, `detours` of
/// them through c, with the summed dwell times in a, b and c.
#[derive(Debug, Clone, Copy)]
struct Block {
    start: f64,
    count: u64,
    detours: u64,
    x: f64,
    y: f64,
    z: f64,
}

impl Block {
    fn duration(&self) -> f64 {
        self.x + self.y + self.z
    }

    /// The first `m` loops and the rest.
    fn split(self, m: u64, rng: &mut ShotRng) -> (Block, Block) {
        let k = self.count;
        let d = if self.detours == 0 || m == k {
            if m == k { self.detours } else { 0 }
        } else if self.detours == k {
            m
        } else {
            Hypergeometric::new(k, self.detours, m).map(|h| h.sample(rng)).unwrap_or(self.detours * m / k)
        };
        let f = beta(rng, m as f64, (k - m) as f64);
        let g = beta(rng, m as f64, (k - m) as f64);
        let h = beta(rng, d as f64, (self.detours - d) as f64);
        let first = Block {
            start: self.start,
            count: m,
            detours: d,
            x: self.x * f,
            y: self.y * g,
            z: self.z * h,
        };
        let rest = Block {
            start: self.start + first.duration(),
            count: k - m,
            detours: self.detours - d,
            x: self.x - first.x,
            y: self.y - first.y,
            z: self.z - first.z,
        };
        (first, rest)
    }
}

/// Outcome of an accelerated simulation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WindowOutcome {
    /// Registered photons (after thinning, dark counts and dead time).
    pub photons: u64,
    pub photon_times: Vec<f64>,
    pub emissions: u64,
    pub final_level: usize,
    /// Time at which a target set was entered, if one was requested and hit.
    pub hit_time: Option<f64>,
}

struct Runner<'a> {
    g: &'a LevelGraph,
    det: Option<&'a Detector>,
    record_times: bool,
    detected: u64,
    times: Vec<f64>,
    emissions: u64,
}

impl Runner<'_> {
    fn emit(&mut self, t: f64, rng: &mut ShotRng) {
        self.emissions += 1;
        if let Some(d) = self.det {
            if rng.random::<f64>() < d.eta_collect {
                self.detected += 1;
                if self.record_times {
                    self.times.push(t);
                }
            }
        }
    }

    /// Photons from a block of completed loops, one emission per loop.
    fn emit_block(&mut self, b: Block, rng: &mut ShotRng) {
        self.emissions += b.count;
        let Some(d) = self.det else { return };
        let n = binomial(rng, b.count, d.eta_collect);
        self.detected += n;
        if !self.record_times || n == 0 {
            return;
        }
        let mut idx: Vec<u64> =
            rand::seq::index::sample(rng, b.count as usize, n as usize).into_iter().map(|i| i as u64 + 1).collect();
        idx.sort_unstable();
        // peel off the loops before each detected one, then that loop itself
        let (mut rest, mut prev) = (b, 0u64);
        for i in idx {
            let before = i - prev - 1;
            if before > 0 {
                rest = rest.split(before, rng).1;
            }
            let (one, r) = rest.split(1, rng);
            self.times.push(one.start + one.x + one.y);
            rest = r;
            prev = i;
        }
    }

    /// Completed loops of a block that overshoots `t_end`, and the level the
    /// loop in progress occupies at `t_end`.
    fn truncate(&mut self, b: Block, t_end: f64, cyc: (usize, usize, Option<usize>), rng: &mut ShotRng) -> usize {
        let (a, bb, c) = cyc;
        let mut cur = b;
        loop {
            let avail = t_end - cur.start;
            if cur.count == 1 {
                if avail < cur.x {
                    return a;
                }
                if avail < cur.x + cur.y {
                    return bb;
                }
                // a detour whose photon has already left
                self.emit(cur.start + cur.x + cur.y, rng);
                return c.expect("only detours extend past the b dwell");
            }
            let (first, rest) = cur.split(cur.count / 2, rng);
            if first.duration() <= avail {
                self.emit_block(first, rng);
                cur = rest;
            } else {
                cur = first;
            }
        }
    }

    /// Core loop; stops at `t_end` or on entering `targets`.
    fn run(&mut self, initial: usize, t_end: f64, targets: LevelSet, rng: &mut ShotRng) -> (usize, Option<f64>) {
        let g = self.g;
        let mut t = 0.0;
        let mut level = initial;
        if targets.contains(level) {
            return (level, Some(0.0));
        }
        loop {
            let ra = g.total[level];
            if ra == 0.0 {
                return (level, None);
            }
            let cycle = g.cycle[level].filter(|c| !targets.contains(c.b)).map(|mut c| {
                if c.c.is_some_and(|x| targets.contains(x)) {
                    c.c = None;
                    c.p2 = 0.0;
                }
                c
            });
            let Some(cyc) = cycle else {
                let dt = exp_sample(rng, ra);
                if t + dt >= t_end {
                    return (level, None);
                }
                t += dt;
                let next = pick(g, level, LevelSet::default(), rng);
                if g.radiative[level][next] {
                    self.emit(t, rng);
                }
                level = next;
                if targets.contains(level) {
                    return (level, Some(t));
                }
                continue;
            };

            let (a, b) = (level, cyc.b);
            let rb = g.total[b];
            let rc = cyc.c.map_or(0.0, |c| g.total[c]);
            let p_loop = cyc.p1 + cyc.p2;
            let q = 1.0 - p_loop;
            let detour_frac = cyc.p2 / p_loop;
            // cap blocks at a few times the loops that fit in the remaining time
            let mean_loop = 1.0 / ra + 1.0 / rb + if rc > 0.0 { detour_frac / rc } else { 0.0 };
            let cap = (4.0 * (t_end - t) / mean_loop + 64.0).min(1e15);
            let k = if q > 0.0 {
                let u: f64 = 1.0 - rng.random::<f64>();
                (u.ln() / (-q).ln_1p()).floor()
            } else {
                f64::INFINITY
            };
            let capped = k > cap;
            let count = if capped { cap.floor() } else { k } as u64;
            let detours = binomial(rng, count, detour_frac);
            let block = Block {
                start: t,
                count,
                detours,
                x: gamma(rng, count as f64, ra),
                y: gamma(rng, count as f64, rb),
                z: gamma(rng, detours as f64, rc),
            };
            if block.start + block.duration() > t_end {
                let at = self.truncate(block, t_end, (a, b, cyc.c), rng);
                return (at, None);
            }
            self.emit_block(block, rng);
            t += block.duration();
            if capped {
                continue;
            }
            // the loop-breaking event: leave a other than to b, leave b other
            // than to a (or c), or leave c other than to a
            let dt = exp_sample(rng, ra);
            if t + dt >= t_end {
                return (a, None);
            }
            t += dt;
            let (pab, pba) = (g.prob(a, b), g.prob(b, a));
            let pbc = cyc.c.map_or(0.0, |c| g.prob(b, c));
            let pca = cyc.c.map_or(0.0, |c| g.prob(c, a));
            let w_direct = 1.0 - pab;
            let w_b = pab * (1.0 - pba - pbc).max(0.0);
            let w_c = pab * pbc * (1.0 - pca);
            let u = rng.random::<f64>() * (w_direct + w_b + w_c);
            if u < w_direct {
                let next = pick(g, a, LevelSet::of(&[b]), rng);
                if g.radiative[a][next] {
                    self.emit(t, rng);
                }
                level = next;
            } else {
                let dtb = exp_sample(rng, rb);
                if t + dtb >= t_end {
                    return (b, None);
                }
                t += dtb;
                if u < w_direct + w_b {
                    let excl = match cyc.c {
                        Some(c) => LevelSet::of(&[a, c]),
                        None => LevelSet::of(&[a]),
                    };
                    let next = pick(g, b, excl, rng);
                    if g.radiative[b][next] {
                        self.emit(t, rng);
                    }
                    level = next;
                } else {
                    let c = cyc.c.expect("w_c > 0 needs a detour level");
                    self.emit(t, rng);
                    let dtc = exp_sample(rng, rc);
                    if t + dtc >= t_end {
                        return (c, None);
                    }
                    t += dtc;
                    let next = pick(g, c, LevelSet::of(&[a]), rng);
                    if g.radiative[c][next] {
                        self.emit(t, rng);
                    }
                    level = next;
                }
            }
            if targets.contains(level) {
                return (level, Some(t));
            }
        }
    }
}

/// Photon count (and final level) of one window, block-sampling bright cycles.
pub fn simulate_window(
    initial_level: usize,
    graph: &LevelGraph,
    duration: f64,
    detector: &Detector,
    record_times: bool,
    rng: &mut ShotRng,
) -> Result<WindowOutcome> {
    LevelGraph::check_level(initial_level)?;
    detector.validate()?;
    check_duration(duration)?;
    let need_times = record_times || detector.needs_times();
    let mut runner = Runner {
        g: graph,
        det: Some(detector),
        record_times: need_times,
        detected: 0,
        times: Vec::new(),
        emissions: 0,
    };
    let (final_level, _) = runner.run(initial_level, duration, LevelSet::default(), rng);
    let (photons, photon_times) = if need_times {
        runner.times.sort_by(f64::total_cmp);
        let times = finish_detection(runner.times, detector, duration, rng);
        (times.len() as u64, if record_times { times } else { Vec::new() })
    } else {
        (runner.detected + poisson(rng, detector.dark_rate * duration), Vec::new())
    };
    Ok(WindowOutcome {
        photons,
        photon_times,
        emissions: runner.emissions,
        final_level,
        hit_time: None,
    })
}

/// Final level after `duration` without photon bookkeeping.
pub fn propagate(initial_level: usize, graph: &LevelGraph, duration: f64, rng: &mut ShotRng) -> Result<usize> {
    LevelGraph::check_level(initial_level)?;
    check_duration(duration)?;
    let mut runner = Runner {
        g: graph,
        det: None,
        record_times: false,
        detected: 0,
        times: Vec::new(),
        emissions: 0,
    };
    Ok(runner.run(initial_level, duration, LevelSet::default(), rng).0)
}

/// Time to first enter `targets`, or `None` if not reached by `t_max`.
pub fn first_passage(initial_level: usize, graph: &LevelGraph, targets: LevelSet, t_max: f64, rng: &mut ShotRng) -> Result<Option<f64>> {
    LevelGraph::check_level(initial_level)?;
    if !(t_max > 0.0) {
        return Err(SimError::param("t_max", "must be positive"));
    }
    let mut runner = Runner {
        g: graph,
        det: None,
        record_times: false,
        detected: 0,
        times: Vec::new(),
        emissions: 0,
    };
    Ok(runner.run(initial_level, t_max, targets, rng).1)
}

/// Exact mean first-passage time into `targets` from the linear system
/// Σ_j Q_ij m_j = −1 over non-target levels.
pub fn mean_first_passage(graph: &LevelGraph, initial_level: usize, targets: LevelSet) -> Result<f64> {
    LevelGraph::check_level(initial_level)?;
    if targets.contains(initial_level) {
        return Ok(0.0);
    }
    // levels reachable from the start without passing through a target
    let mut seen = [false; N_LEVELS];
    let mut stack = vec![initial_level];
    seen[initial_level] = true;
    while let Some(i) = stack.pop() {
        for j in 0..N_LEVELS {
            if !seen[j] && !targets.contains(j) && graph.rate(i, j) > 0.0 {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    let free: Vec<usize> = (0..N_LEVELS).filter(|&i| seen[i]).collect();
    let n = free.len();
    let q = graph.generator();
    let a = DMatrix::from_fn(n, n, |r, c| q[(free[r], free[c])]);
    let rhs = nalgebra::DVector::from_element(n, -1.0);
    let sol = a.lu().solve(&rhs).ok_or_else(|| SimError::param("targets", "not reachable from the initial level"))?;
    let pos = free.iter().position(|&i| i == initial_level).expect("initial level is free");
    let m = sol[pos];
    if !(m.is_finite() && m >= 0.0) {
        return Err(SimError::param("targets", "not reachable from the initial level"));
    }
    Ok(m)
}

/// Level occupations p(t) = p(0)·exp(Q t).
pub fn occupations(graph: &LevelGraph, p0: &[f64; N_LEVELS], t: f64) -> [f64; N_LEVELS] {
    let e = (graph.generator() * t).exp();
    std::array::from_fn(|j| (0..N_LEVELS).map(|i| p0[i] * e[(i, j)]).sum())
}

/// ∫₀ᵗ p(s) ds and p(t), from the augmented exponential exp([[Q, I], [0, 0]]·t).
pub fn occupation_integral(graph: &LevelGraph, p0: &[f64; N_LEVELS], t: f64) -> ([f64; N_LEVELS], [f64; N_LEVELS]) {
    let n = N_LEVELS;
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&(graph.generator() * t));
    for i in 0..n {
        m[(i, n + i)] = t;
    }
    let e = m.exp();
    let integral = std::array::from_fn(|j| (0..n).map(|i| p0[i] * e[(i, n + j)]).sum());
    let occ = std::array::from_fn(|j| (0..n).map(|i| p0[i] * e[(i, j)]).sum());
    (integral, occ)
}

/// Expected radiative emissions in [0, t] and occupations at t.
pub fn expected_emissions(graph: &LevelGraph, p0: &[f64; N_LEVELS], t: f64) -> (f64, [f64; N_LEVELS]) {
    let (integral, occ) = occupation_integral(graph, p0, t);
    let total = integral.iter().zip(graph.emission_rates()).map(|(a, r)| a * r).sum();
    (total, occ)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_rates() -> RateSet {
        RateSet {
            gamma_plus: 0.0,
            gamma_minus: 1e7,
            gamma_par: 0.0,
            gamma_perp: 0.0,
            r_scatter: 2e7,
            r_off: 0.0,
            gamma_t1: 0.0,
            t1_down: 0.0,
            t1_up: 0.0,
            eta_down: 0.99,
            eta_up: 0.99,
            branch_ub: 0.1,
            gamma_optical: 1.0 / 1.7e-9,
            gamma_ub: 5e6,
            f_qubit: 1e9,
            delta_gs: 80e9,
            temperature: 0.1,
        }
    }

    #[test]
    fn no_collection_no_photons() {
        let g = LevelGraph::optical(&toy_rates(), Some(Transition::Down)).unwrap();
        for seed in 0..20 {
            let r = jump_trajectory(LB_DOWN, &g, 5e-6, 0.0, seed).unwrap();
            assert!(r.photon_times.is_empty());
            assert!(r.emissions > 0);
        }
    }

    #[test]
    fn deterministic_and_increasing() {
        let g = LevelGraph::optical(&toy_rates(), Some(Transition::Down)).unwrap();
        let a = jump_trajectory(LB_DOWN, &g, 2e-6, 0.3, 9).unwrap();
        let b = jump_trajectory(LB_DOWN, &g, 2e-6, 0.3, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.jump_times.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(a.level_path.len(), a.jump_times.len() + 1);
    }

    #[test]
    fn rejects_bad_level() {
        let g = LevelGraph::optical(&toy_rates(), None).unwrap();
        assert!(matches!(jump_trajectory(6, &g, 1e-6, 0.1, 0), Err(SimError::UnknownLevel { .. })));
    }

    #[test]
    fn bright_loop_detected() {
        let g = LevelGraph::optical(&toy_rates(), Some(Transition::Down)).unwrap();
        assert_eq!(g.cycle[LB_DOWN].map(|p| p.b), Some(ES_DOWN));
        assert_eq!(g.cycle[LB_DOWN].and_then(|p| p.c), Some(UB_DOWN));
        assert!(g.cycle[LB_UP].is_none());
    }

    #[test]
    fn mfpt_two_state() {
        let mut k = [[0.0; N_LEVELS]; N_LEVELS];
        k[0][1] = 3.0;
        let g = LevelGraph::new(k, [[false; N_LEVELS]; N_LEVELS]).unwrap();
        let m = mean_first_passage(&g, 0, LevelSet::of(&[1])).unwrap();
        assert!((m - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn occupations_conserve_probability() {
        let g = LevelGraph::optical(&toy_rates(), Some(Transition::Down)).unwrap();
        let p = occupations(&g, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0], 1e-5);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn blocks_match_master_equation() {
        // spin-flip leakage and UB shelving both break the loops
        let r = RateSet {
            r_off: 2e5,
            gamma_t1: 1e4,
            t1_down: 5e3,
            t1_up: 5e3,
            ..toy_rates()
        };
        let g = LevelGraph::optical(&r, Some(Transition::Down)).unwrap();
        let det = Detector::ideal(0.05);
        let t = 20e-6;
        let p0 = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let (em, _) = expected_emissions(&g, &p0, t);
        let occ = occupations(&g, &p0, t);
        let mut rng = crate::rng::single(11);
        let n = 20000;
        let (mut sum_em, mut sum_ph, mut hist) = (0.0, 0.0, [0.0; N_LEVELS]);
        for k in 0..n {
            let w = simulate_window(LB_DOWN, &g, t, &det, k % 4 == 0, &mut rng).unwrap();
            sum_em += w.emissions as f64;
            sum_ph += w.photons as f64;
            hist[w.final_level] += 1.0 / n as f64;
            if k % 4 == 0 {
                assert_eq!(w.photon_times.len() as u64, w.photons);
                assert!(w.photon_times.iter().all(|x| (0.0..=t).contains(x)));
            }
        }
        let mean_em = sum_em / n as f64;
        assert!((mean_em / em - 1.0).abs() < 0.02, "{mean_em} vs {em}");
        assert!((sum_ph / n as f64 / (0.05 * em) - 1.0).abs() < 0.03);
        for l in 0..N_LEVELS {
            let sd = (occ[l] * (1.0 - occ[l]) / n as f64).sqrt();
            assert!((hist[l] - occ[l]).abs() < 5.0 * sd + 1e-3, "level {l}: {} vs {}", hist[l], occ[l]);
        }
    }
}
