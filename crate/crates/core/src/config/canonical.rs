//! Canonical text form: fixed section and key order, every value in base
//! units, shortest round-trip numbers. Parsing the output yields an equal
//! config, and dumping that again reproduces the text byte for byte.

use super::document::ValueList;
use super::schema::{protocol_keys, system_value, CpmgFit, ExperimentConfig, ExperimentSpec, NoiseSpec, SYSTEM_KEYS};
use super::units::{format_number, Dim};
use crate::model::Spin;
use std::fmt::Write;

fn with_unit(body: String, dim: Dim) -> String {
    match dim.base_unit() {
        "" => body,
        u => format!("{body} {u}"),
    }
}

fn scalar(v: f64, dim: Dim) -> String {
    with_unit(format_number(v), dim)
}

fn list(l: &ValueList, dim: Dim) -> String {
    let body = match l {
        ValueList::Explicit(v) => v.iter().map(|x| format_number(*x)).collect::<Vec<_>>().join(", "),
        ValueList::Linspace { start, stop, n } => {
            format!("linspace({}, {}, {n})", format_number(*start), format_number(*stop))
        }
        ValueList::Logspace { start, stop, n } => {
            format!("logspace({}, {}, {n})", format_number(*start), format_number(*stop))
        }
    };
    with_unit(body, dim)
}

pub fn canonical(c: &ExperimentConfig) -> String {
    let mut out = String::new();
    let kv = |out: &mut String, k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };

    out.push_str("[system]\n");
    for &(key, dim) in SYSTEM_KEYS {
        kv(&mut out, key, scalar(system_value(&c.system, key), dim));
    }

    for n in &c.noise {
        out.push_str("\n[noise]\n");
        kv(&mut out, "model", n.model_name().into());
        match n {
            NoiseSpec::Ou { sigma, tau_c } => {
                kv(&mut out, "sigma", scalar(*sigma, Dim::Angular));
                kv(&mut out, "tau_c", scalar(*tau_c, Dim::Time));
            }
            NoiseSpec::QuasiStatic { sigma } => kv(&mut out, "sigma", scalar(*sigma, Dim::Angular)),
            NoiseSpec::GFactor => {}
            NoiseSpec::Tabulated { file, scale, .. } => {
                kv(&mut out, "file", file.clone());
                kv(&mut out, "scale", scalar(*scale, Dim::Dimensionless));
            }
            NoiseSpec::C13 { a_par, a_perp } => {
                kv(&mut out, "a_par", scalar(*a_par, Dim::Frequency));
                kv(&mut out, "a_perp", scalar(*a_perp, Dim::Frequency));
            }
        }
    }

    out.push_str("\n[experiment]\n");
    let kind = c.experiment.kind();
    kv(&mut out, "type", kind.into());
    match &c.experiment {
        ExperimentSpec::Odmr {
            tau_mw,
            f_center,
            f_span,
            n_points,
        } => {
            kv(&mut out, "tau_mw", scalar(*tau_mw, Dim::Time));
            kv(&mut out, "f_center", f_center.map_or("auto".into(), |f| scalar(f, Dim::Frequency)));
            kv(&mut out, "f_span", scalar(*f_span, Dim::Frequency));
            kv(&mut out, "n_points", n_points.to_string());
        }
        ExperimentSpec::Rabi { durations, detuning } => {
            kv(&mut out, "durations", list(durations, Dim::Time));
            kv(&mut out, "detuning", scalar(*detuning, Dim::Frequency));
        }
        ExperimentSpec::Ramsey { delays, detuning } => {
            kv(&mut out, "delays", list(delays, Dim::Time));
            kv(&mut out, "detuning", scalar(*detuning, Dim::Frequency));
        }
        ExperimentSpec::Cpmg {
            n_pulses,
            total_times,
            fit,
            exponent,
        } => {
            let ns: Vec<String> = n_pulses.iter().map(|n| n.to_string()).collect();
            kv(&mut out, "n_pulses", ns.join(", "));
            kv(&mut out, "total_times", list(total_times, Dim::Time));
            kv(
                &mut out,
                "fit",
                match fit {
                    CpmgFit::Fixed => "fixed",
                    CpmgFit::Free => "free",
                }
                .into(),
            );
            kv(&mut out, "exponent", scalar(*exponent, Dim::Dimensionless));
        }
        ExperimentSpec::T1 { waits } => kv(&mut out, "waits", list(waits, Dim::Time)),
        ExperimentSpec::Pumping {
            alphas,
            b_mags,
            trajectories,
        } => {
            kv(&mut out, "alphas", list(alphas, Dim::Angle));
            kv(&mut out, "b_mags", list(b_mags, Dim::Field));
            kv(&mut out, "trajectories", trajectories.to_string());
        }
        ExperimentSpec::ReadoutHistogram => {}
        ExperimentSpec::Ple {
            temperatures,
            linewidth,
            rel_noise,
        } => {
            kv(&mut out, "temperatures", list(temperatures, Dim::Temperature));
            kv(&mut out, "linewidth", scalar(*linewidth, Dim::Frequency));
            kv(&mut out, "rel_noise", scalar(*rel_noise, Dim::Dimensionless));
        }
    }
    let p = &c.protocol;
    for &key in protocol_keys(kind) {
        let v = match key {
            "saturation" => scalar(p.saturation, Dim::Dimensionless),
            "readout_duration" => scalar(p.readout_duration, Dim::Time),
            "init_duration" => p.init_duration.map_or("auto".into(), |t| scalar(t, Dim::Time)),
            "threshold" => p.threshold.to_string(),
            "rabi" => scalar(p.rabi, Dim::Frequency),
            "pulse_error" => scalar(p.pulse_error, Dim::Dimensionless),
            "init_state" => match p.init_state {
                Spin::Up => "up".into(),
                Spin::Down => "down".into(),
            },
            _ => unreachable!(),
        };
        kv(&mut out, key, v);
    }

    let r = &c.run;
    out.push_str("\n[run]\n");
    kv(&mut out, "seed", r.seed.to_string());
    kv(&mut out, "shots", r.shots.to_string());
    if let Some(o) = &r.out {
        kv(&mut out, "out", o.clone());
    }
    kv(&mut out, "dt", scalar(r.dt, Dim::Time));
    kv(&mut out, "workers", r.workers.map_or("auto".into(), |w| w.to_string()));
    out
}
