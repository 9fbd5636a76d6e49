//! End-to-end runs: config → sequence → shots → fits → table, summary and
//! plot data.
//!
//! Fits are made on the measured bright fraction (`mean`), weighted with
//! binomial errors of the add-one estimate (bright + 1)/(shots + 2) so that
//! points at 0 or 1 keep a finite error.

use crate::analysis::{
    fit_boltzmann, fit_decay, fit_oscillation, fit_power_law, fit_rabi_lineshape, rabi_lineshape_fwhm, DecayModel, Envelope,
    FitResult,
};
use crate::calibration::pumping_time;
use crate::config::{canonical, CpmgFit, ExperimentConfig, ExperimentSpec};
use crate::constants::TAU;
use crate::error::{Result, SimError};
use crate::exec::Executor;
use crate::model::{level_diagram, phonon_rates, ple_spectrum, PlePoint};
use crate::readout::{build_histograms, optimal_threshold, poisson_fidelity, shelving_diagnostic, simulate_counts, threshold_fidelity};
use crate::rng::{stream, Purpose, StreamKey};
use crate::sequence::{
    build_cpmg, build_odmr, build_rabi, build_ramsey, build_t1, run_experiment, run_pumping, DataTable, PumpingCase, Settings,
};
use rand_distr::{Distribution, StandardNormal};
use serde_json::{json, Map, Value};

/// How a series is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Points,
    /// Unfilled markers, for reference values drawn over measured points.
    OpenPoints,
    Line,
    Steps,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub err: Option<Vec<f64>>,
    pub style: Style,
}

/// Renderer-independent description of the result figure.
#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub data: DataTable,
    /// JSON object; `serde_json::Map` keeps its keys sorted.
    pub summary: Map<String, Value>,
    pub plot: Plot,
}

/// Runs the configured experiment.
pub fn run(cfg: &ExperimentConfig, exec: &Executor) -> Result<RunOutput> {
    let sys = &cfg.system;
    let d = level_diagram(&sys.params, &sys.field)?;
    let mut summary = Map::new();
    summary.insert("experiment".into(), json!(cfg.experiment.kind()));
    summary.insert("seed".into(), json!(cfg.run.seed));
    summary.insert("config".into(), json!(canonical(cfg)));
    summary.insert("f_qubit_hz".into(), json!(d.f_qubit));
    summary.insert("delta_gs_ghz".into(), json!(d.delta_gs * 1e-9));

    let ctx = Ctx { cfg, exec };
    let (data, plot) = match &cfg.experiment {
        ExperimentSpec::Odmr {
            tau_mw,
            f_center,
            f_span,
            n_points,
        } => ctx.odmr(*tau_mw, f_center.unwrap_or(d.f_qubit), *f_span, *n_points, d.f_qubit, &mut summary)?,
        ExperimentSpec::Rabi { durations, detuning } => ctx.rabi(&durations.values(), *detuning, &mut summary)?,
        ExperimentSpec::Ramsey { delays, detuning } => ctx.ramsey(&delays.values(), *detuning, &mut summary)?,
        ExperimentSpec::Cpmg {
            n_pulses,
            total_times,
            fit,
            exponent,
        } => ctx.cpmg(n_pulses, &total_times.values(), *fit, *exponent, &mut summary)?,
        ExperimentSpec::T1 { waits } => ctx.t1(&waits.values(), &mut summary)?,
        ExperimentSpec::Pumping {
            alphas,
            b_mags,
            trajectories,
        } => ctx.pumping(&alphas.values(), &b_mags.values(), *trajectories, &mut summary)?,
        ExperimentSpec::ReadoutHistogram => ctx.readout(&mut summary)?,
        ExperimentSpec::Ple {
            temperatures,
            linewidth,
            rel_noise,
        } => ctx.ple(&temperatures.values(), *linewidth, *rel_noise, d.delta_gs, &mut summary)?,
    };
    Ok(RunOutput { data, summary, plot })
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    exec: &'a Executor,
}

fn fit_value(f: &FitResult) -> Value {
    serde_json::to_value(f).expect("fit results serialize")
}

/// NaN and ±∞ become `null`.
fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

/// A converged fit's parameter, else NaN.
fn param(f: &FitResult, name: &str) -> f64 {
    if f.converged {
        f.get(name).unwrap_or(f64::NAN)
    } else {
        f64::NAN
    }
}

/// Signal and fit weights of a shot table.
fn signal(t: &DataTable) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let shots: f64 = t.meta.get("shots_per_point").and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let x = t.column("sweep").expect("shot table").to_vec();
    let y = t.column("mean").expect("shot table").to_vec();
    let e = t
        .column("bright")
        .expect("shot table")
        .iter()
        .map(|b| {
            let p = (b + 1.0) / (shots + 2.0);
            (p * (1.0 - p) / shots).sqrt()
        })
        .collect();
    (x, y, e)
}

fn grid(x: &[f64], log: bool) -> Vec<f64> {
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n = 400;
    (0..n)
        .map(|i| {
            let u = i as f64 / (n - 1) as f64;
            if log && lo > 0.0 {
                lo * (hi / lo).powf(u)
            } else {
                lo + (hi - lo) * u
            }
        })
        .collect()
}

fn data_series(label: &str, x: &[f64], y: &[f64], err: Option<&[f64]>) -> Series {
    Series {
        label: label.into(),
        x: x.to_vec(),
        y: y.to_vec(),
        err: err.map(<[f64]>::to_vec),
        style: Style::Points,
    }
}

fn curve(label: &str, x: Vec<f64>, f: impl Fn(f64) -> f64) -> Series {
    let y = x.iter().map(|&v| f(v)).collect();
    Series {
        label: label.into(),
        x,
        y,
        err: None,
        style: Style::Line,
    }
}

fn decay_curve(f: &FitResult, p: f64) -> impl Fn(f64) -> f64 + '_ {
    move |x| {
        let p = f.get("p").unwrap_or(p);
        f.get("amplitude").unwrap_or(f64::NAN) * (-(x / f.get("t").unwrap_or(f64::NAN)).powf(p)).exp()
            + f.get("offset").unwrap_or(0.0)
    }
}

fn osc_curve(f: &FitResult, env: Envelope) -> impl Fn(f64) -> f64 + '_ {
    move |x| {
        let g = |n| f.get(n).unwrap_or(f64::NAN);
        let e = match env {
            Envelope::None => 1.0,
            Envelope::Exp => (-x / g("t")).exp(),
            Envelope::Gauss => (-(x / g("t")).powi(2)).exp(),
        };
        g("amplitude") * e * (TAU * g("frequency") * x + g("phase")).cos() + g("offset")
    }
}

fn plot(title: &str, x_label: &str, y_label: &str, log_x: bool, series: Vec<Series>) -> Plot {
    Plot {
        title: title.into(),
        x_label: x_label.into(),
        y_label: y_label.into(),
        log_x,
        log_y: false,
        series,
    }
}

impl Ctx<'_> {
    /// Shot-protocol settings, with the initialization length resolved.
    fn settings(&self, summary: &mut Map<String, Value>) -> Result<Settings> {
        let (sys, p) = (&self.cfg.system, &self.cfg.protocol);
        let tp = pumping_time(&sys.params, &sys.field, sys.temperature, p.saturation)?;
        let init = p.init_time(tp);
        summary.insert("pumping_time_s".into(), num(tp));
        summary.insert("init_duration_s".into(), json!(init));
        summary.insert("readout_duration_s".into(), json!(p.readout_duration));
        Ok(Settings {
            init_duration: init,
            readout_duration: p.readout_duration,
            saturation: p.saturation,
            rabi: p.rabi,
            init_state: p.init_state,
            threshold: p.threshold,
            pulse_error: p.pulse_error,
            shots: self.cfg.run.shots,
        })
    }

    fn shots(&self, seq: &crate::sequence::PulseSequence) -> Result<DataTable> {
        run_experiment(seq, &self.cfg.system, &self.cfg.noise_models(), self.cfg.run.seed, self.cfg.run.dt, self.exec)
    }

    fn odmr(&self, tau: f64, f_center: f64, span: f64, n: usize, f_qubit: f64, s: &mut Map<String, Value>) -> Result<(DataTable, Plot)> {
        let seq = build_odmr(tau, f_center, span, n, &self.settings(s)?)?;
        let t = self.shots(&seq)?;
        let (x, y, e) = signal(&t);
        let f = fit_rabi_lineshape(&x, &y, Some(&e), tau)?;
        let rabi = param(&f, "rabi");
        s.insert("fit".into(), fit_value(&f));
        s.insert("center_offset_hz".into(), num(param(&f, "center") - f_qubit));
        s.insert("fwhm_hz".into(), num(rabi_lineshape_fwhm(rabi, tau)));
        s.insert("fourier_fwhm_hz".into(), num(rabi_lineshape_fwhm(0.5 / tau, tau)));
        let line = |v: f64| {
            let g = |k| f.get(k).unwrap_or(f64::NAN);
            let (d, om) = (v - g("center"), g("rabi"));
            let w2 = om * om + d * d;
            g("amplitude") * om * om / w2 * (std::f64::consts::PI * tau * w2.sqrt()).sin().powi(2) + g("offset")
        };
        let mut series = vec![data_series("bright fraction", &x, &y, Some(&e))];
        if f.converged {
            series.push(curve("sin² line fit", grid(&x, false), line));
        }
        Ok((t, plot("Pulsed ODMR", "MW frequency (Hz)", "bright fraction", false, series)))
    }

    fn rabi(&self, durations: &[f64], detuning: f64, s: &mut Map<String, Value>) -> Result<(DataTable, Plot)> {
        let st = self.settings(s)?;
        let seq = build_rabi(durations, detuning, &st)?;
        let t = self.shots(&seq)?;
        let (x, y, e) = signal(&t);
        // without resolvable damping the decay time is unidentifiable;
        // fall back to a plain cosine
        let mut env = Envelope::Exp;
        let mut f = fit_oscillation(&x, &y, Some(&e), env)?;
        if !f.converged {
            let g = fit_oscillation(&x, &y, Some(&e), Envelope::None)?;
            if g.converged {
                (f, env) = (g, Envelope::None);
            }
        }
        s.insert("fit".into(), fit_value(&f));
        s.insert("envelope".into(), json!(if env == Envelope::Exp { "exp" } else { "none" }));
        s.insert("rabi_frequency_hz".into(), num(param(&f, "frequency")));
        // generalized Rabi frequency expected for the drive
        s.insert("expected_frequency_hz".into(), json!(st.rabi.hypot(detuning)));
        let mut series = vec![data_series("bright fraction", &x, &y, Some(&e))];
        if f.converged {
            series.push(curve("cosine fit", grid(&x, false), osc_curve(&f, env)));
        }
        Ok((t, plot("Rabi oscillation", "pulse duration (s)", "bright fraction", false, series)))
    }

    fn ramsey(&self, delays: &[f64], detuning: f64, s: &mut Map<String, Value>) -> Result<(DataTable, Plot)> {
        let seq = build_ramsey(delays, detuning, &self.settings(s)?)?;
        let t = self.shots(&seq)?;
        let (x, y, e) = signal(&t);
        let f = fit_oscillation(&x, &y, Some(&e), Envelope::Gauss)?;
        s.insert("fit".into(), fit_value(&f));
        s.insert("fringe_frequency_hz".into(), num(param(&f, "frequency")));
        s.insert("t2_star_s".into(), num(param(&f, "t")));
        s.insert("detuning_hz".into(), json!(detuning));
        let mut series = vec![data_series("bright fraction", &x, &y, Some(&e))];
        if f.converged {
            series.push(curve("Gaussian-damped fringe fit", grid(&x, false), osc_curve(&f, Envelope::Gauss)));
        }
        Ok((t, plot("Ramsey interference", "free precession (s)", "bright fraction", false, series)))
    }

    fn cpmg(&self, ns: &[usize], totals: &[f64], fit: CpmgFit, exponent: f64, s: &mut Map<String, Value>) -> Result<(DataTable, Plot)> {
        let st = self.settings(s)?;
        let model = match fit {
            CpmgFit::Fixed => DecayModel::Stretched(exponent),
            CpmgFit::Free => DecayModel::StretchedFree,
        };
        let mut all = DataTable::with_columns(&["n_pulses", "total_time", "mean", "err", "bright", "photons", "p_down"]);
        let (mut fits, mut t2) = (Map::new(), Map::new());
        let (mut n_ok, mut t2_ok, mut t2_err) = (Vec::new(), Vec::new(), Vec::new());
        let mut series = Vec::new();
        for &n in ns {
            let seq = build_cpmg(n, totals, &st)?;
            let t = self.shots(&seq)?;
            let (x, y, e) = signal(&t);
            for i in 0..t.len() {
                let row: Vec<f64> = ["mean", "err", "bright", "photons", "p_down"].iter().map(|c| t.column(c).unwrap()[i]).collect();
                all.push_row(&[&[n as f64, x[i]], row.as_slice()].concat());
            }
            let f = fit_decay(&x, &y, Some(&e), model)?;
            let tv = param(&f, "t");
            if tv.is_finite() {
                n_ok.push(n as f64);
                t2_ok.push(tv);
                t2_err.push(f.sigma("t").unwrap_or(f64::NAN));
            }
            series.push(data_series(&format!("N = {n}"), &x, &y, Some(&e)));
            if f.converged {
                series.push(curve(&format!("fit N = {n}"), grid(&x, true), decay_curve(&f, exponent)));
            }
            t2.insert(n.to_string(), num(tv));
            fits.insert(n.to_string(), fit_value(&f));
        }
        s.insert("fits".into(), Value::Object(fits));
        s.insert("t2_s".into(), Value::Object(t2));
        let distinct = {
            let mut v = n_ok.clone();
            v.dedup();
            v.len()
        };
        let power = if distinct >= 3 {
            let errs_ok = t2_err.iter().all(|e| e.is_finite() && *e > 0.0);
            let p = fit_power_law(&n_ok, &t2_ok, errs_ok.then_some(t2_err.as_slice()))?;
            s.insert("beta".into(), num(param(&p, "beta")));
            fit_value(&p)
        } else {
            Value::Null
        };
        s.insert("power_law".into(), power);
        all.meta.insert("seed".into(), self.cfg.run.seed.to_string());
        all.meta.insert("shots_per_point".into(), self.cfg.run.shots.to_string());
        Ok((all, plot("CPMG decay", "total evolution time T (s)", "bright fraction", true, series)))
    }

    fn t1(&self, waits: &[f64], s: &mut Map<String, Value>) -> Result<(DataTable, Plot)> {
        let seq = build_t1(waits, &self.settings(s)?)?;
        let t = self.shots(&seq)?;
        let (x, y, e) = signal(&t);
        let f = fit_decay(&x, &y, Some(&e), DecayModel::Exp)?;
        s.insert("fit".into(), fit_value(&f));
        s.insert("t1_s".into(), num(param(&f, "t")));
        let mut series = vec![data_series("bright fraction", &x, &y, Some(&e))];
        if f.converged {
            series.push(curve("exponential fit", grid(&x, true), decay_curve(&f, 1.0)));
        }
        Ok((t, plot("Spin relaxation", "wait (s)", "bright fraction", true, series)))
    }

    fn pumping(&self, alphas: &[f64], b_mags: &[f64], trajectories: usize, s: &mut Map<String, Value>) -> Result<(DataTable, Plot)> {
        let cases: Vec<PumpingCase> = alphas.iter().zip(b_mags).map(|(&alpha, &b_mag)| PumpingCase { alpha, b_mag }).collect();
        let t = run_pumping(&cases, &self.cfg.system, self.cfg.protocol.saturation, trajectories, self.cfg.run.seed, self.exec)?;
        let col = |c: &str| t.column(c).expect("pumping table").to_vec();
        let (mean, err, exact) = (col("mean"), col("err"), col("exact"));
        let rows: Vec<Value> = (0..t.len())
            .map(|i| {
                json!({
                    "alpha_deg": cases[i].alpha,
                    "b_mag_g": cases[i].b_mag,
                    "mean_s": mean[i],
                    "err_s": err[i],
                    "exact_s": exact[i],
                })
            })
            .collect();
        s.insert("cases".into(), Value::Array(rows));
        s.insert("trajectories".into(), json!(trajectories));
        let idx: Vec<f64> = (0..t.len()).map(|i| i as f64).collect();
        let series = vec![
            data_series("Monte Carlo mean", &idx, &mean, Some(&err)),
            Series {
                style: Style::OpenPoints,
                ..data_series("exact mean first passage", &idx, &exact, None)
            },
        ];
        let mut p = plot("Spin pumping time", "case (alpha, B)", "pumping time (s)", false, series);
        p.log_y = true;
        Ok((t, p))
    }

    fn readout(&self, s: &mut Map<String, Value>) -> Result<(DataTable, Plot)> {
        let (sys, p) = (&self.cfg.system, &self.cfg.protocol);
        let tp = pumping_time(&sys.params, &sys.field, sys.temperature, p.saturation)?;
        let init = p.init_time(tp);
        let window = p.readout_duration;
        let (down, up) = simulate_counts(sys, p.saturation, init, window, self.cfg.run.shots, self.cfg.run.seed, self.exec)?;
        let h = build_histograms(&down, &up, window)?;
        let f = threshold_fidelity(&h, p.threshold);
        let (k_opt, f_opt) = optimal_threshold(&h);
        let r = crate::model::rate_set(&sys.params, &sys.field, sys.temperature, p.saturation)?;
        let shelving = shelving_diagnostic(&r, window, sys.params.eta_collect)?;
        s.insert("pumping_time_s".into(), num(tp));
        s.insert("init_duration_s".into(), json!(init));
        s.insert("readout_duration_s".into(), json!(window));
        s.insert("shots_per_state".into(), json!(h.n_shots));
        s.insert("n_down_mean".into(), json!(h.mean_down()));
        s.insert("n_up_mean".into(), json!(h.mean_up()));
        s.insert("threshold".into(), json!(p.threshold));
        s.insert("f_down".into(), json!(f.f_down));
        s.insert("f_up".into(), json!(f.f_up));
        s.insert("f_avg".into(), json!(f.f_avg));
        s.insert("optimal_threshold".into(), json!(k_opt));
        s.insert("optimal_f_avg".into(), json!(f_opt));
        // what Poisson statistics with the same means would give
        s.insert("poisson_f_avg".into(), json!(poisson_fidelity(h.mean_down(), h.mean_up(), p.threshold).f_avg));
        s.insert("shelving".into(), serde_json::to_value(shelving).expect("plain struct"));
        s.insert("duty_cycle".into(), json!(window / (window + init)));

        let mut t = DataTable::with_columns(&["count", "freq_down", "freq_up"]);
        for i in 0..h.bin_edges.len() {
            t.push_row(&[h.bin_edges[i] as f64, h.freq_down[i] as f64, h.freq_up[i] as f64]);
        }
        t.meta.insert("seed".into(), self.cfg.run.seed.to_string());
        t.meta.insert("shots_per_state".into(), h.n_shots.to_string());
        let x: Vec<f64> = h.bin_edges.iter().map(|&c| c as f64).collect();
        let norm = |f: &[u64]| f.iter().map(|&v| v as f64 / h.n_shots as f64).collect::<Vec<_>>();
        let step = |label: &str, y: Vec<f64>| Series {
            label: label.into(),
            x: x.clone(),
            y,
            err: None,
            style: Style::Steps,
        };
        let series = vec![step("prepared ↓", norm(&h.freq_down)), step("prepared ↑", norm(&h.freq_up))];
        Ok((t, plot("Single-shot readout", "photon count", "probability", false, series)))
    }

    fn ple(&self, temps: &[f64], linewidth: f64, rel_noise: f64, delta: f64, s: &mut Map<String, Value>) -> Result<(DataTable, Plot)> {
        let sys = &self.cfg.system;
        let mut t = DataTable::with_columns(&["temperature", "ratio", "err", "true_ratio", "orbital_polarization"]);
        let (mut ratios, mut errs, mut pol) = (Vec::new(), Vec::new(), Vec::new());
        for (i, &temp) in temps.iter().enumerate() {
            let spec = ple_spectrum(&sys.params, &sys.field, temp, linewidth)?;
            let truth = peak_amplitude_ratio(&spec, delta, linewidth)?;
            let mut rng = stream(self.cfg.run.seed, StreamKey::new(i, 0), Purpose::Synthetic);
            let z: f64 = StandardNormal.sample(&mut rng);
            let measured = truth * (1.0 + rel_noise * z);
            let op = phonon_rates(&sys.params, delta, temp)?.orbital_polarization;
            t.push_row(&[temp, measured, rel_noise * measured, truth, op]);
            ratios.push(measured);
            errs.push(rel_noise * measured);
            pol.push(op);
        }
        if ratios.iter().any(|r| !(*r > 0.0)) {
            return Err(SimError::param("rel_noise", "noise drove a peak ratio non-positive; lower rel_noise"));
        }
        let f = fit_boltzmann(temps, &ratios, (rel_noise > 0.0).then_some(errs.as_slice()))?;
        s.insert("fit".into(), fit_value(&f));
        s.insert("delta_fit_ghz".into(), num(param(&f, "delta") * 1e-9));
        s.insert("delta_fit_err_ghz".into(), num(f.sigma("delta").unwrap_or(f64::NAN) * 1e-9));
        s.insert("orbital_polarization".into(), json!(pol));
        t.meta.insert("seed".into(), self.cfg.run.seed.to_string());
        let inv: Vec<f64> = temps.iter().map(|v| 1.0 / v).collect();
        let mut series = vec![data_series("peak ratio I_D/I_C", &inv, &ratios, Some(&errs))];
        if f.converged {
            let (a, dl) = (param(&f, "amplitude"), param(&f, "delta"));
            series.push(curve("Boltzmann fit", grid(&inv, false), move |u| {
                a * (-crate::constants::H_OVER_KB * dl * u).exp()
            }));
        }
        let mut p = plot("PLE peak ratio", "1/T (1/K)", "I_D / I_C", false, series);
        p.log_y = true;
        Ok((t, p))
    }
}

/// Amplitude ratio of the D (at −Δ) and C (at 0) Lorentzians, separating
/// each line from the tail of the other: with L = L(Δ),
/// I(0) = a + b·L and I(−Δ) = a·L + b.
fn peak_amplitude_ratio(spec: &[PlePoint], delta: f64, linewidth: f64) -> Result<f64> {
    let at = |x: f64| {
        spec.iter()
            .min_by(|p, q| (p.detuning - x).abs().total_cmp(&(q.detuning - x).abs()))
            .map(|p| p.intensity)
            .ok_or(SimError::EmptyInput("PLE spectrum"))
    };
    let (i_c, i_d) = (at(0.0)?, at(-delta)?);
    let hw = 0.5 * linewidth;
    let l = hw * hw / (delta * delta + hw * hw);
    let det = 1.0 - l * l;
    let a = (i_c - l * i_d) / det;
    let b = (i_d - l * i_c) / det;
    Ok(b / a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{boltzmann_factor, FieldConfig};

    #[test]
    fn amplitude_ratio_removes_line_overlap() {
        let p = crate::config::defaults().system.params.clone();
        let field = FieldConfig::new(0.0, 0.0).unwrap();
        let delta = level_diagram(&p, &field).unwrap().delta_gs;
        for temp in [0.1, 1.0, 10.0] {
            let spec = ple_spectrum(&p, &field, temp, 2e9).unwrap();
            let r = peak_amplitude_ratio(&spec, delta, 2e9).unwrap();
            let exact = boltzmann_factor(delta, temp);
            assert!((r - exact).abs() <= 1e-9 * exact + 1e-15, "{temp}: {r} vs {exact}");
        }
    }
}
