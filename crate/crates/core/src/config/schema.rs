use super::document::{self, parse_document, Entry, Section, ValueList};
use super::error::ConfigError;
use super::units::Dim;
use crate::error::SimError;
use crate::model::{FieldConfig, SivParams, Spin};
use crate::noise::{NoiseModel, TabulatedSpectrum};
use std::path::{Path, PathBuf};

/// Emitter, field and temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub params: SivParams,
    pub field: FieldConfig,
    /// Kelvin.
    pub temperature: f64,
}

/// Timing and drive settings shared by the shot-based experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct Protocol {
    /// Laser saturation parameter s during initialization and readout.
    pub saturation: f64,
    pub readout_duration: f64,
    /// `None`: long enough for ≥ 99% pumping (see `Protocol::init_time`).
    pub init_duration: Option<f64>,
    /// A shot is bright when its count exceeds this.
    pub threshold: u64,
    /// Microwave Rabi frequency (Hz).
    pub rabi: f64,
    /// Relative rms rotation-angle error per pulse.
    pub pulse_error: f64,
    /// Qubit state prepared by the initialization laser.
    pub init_state: Spin,
}

impl Protocol {
    /// Initialization length for a given pumping time: the configured value,
    /// or max(15 ms, 5·τ_pump).
    pub fn init_time(&self, pumping_time: f64) -> f64 {
        self.init_duration.unwrap_or_else(|| (5.0 * pumping_time).max(15e-3))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    /// Shots per sweep point (per prepared state for readout histograms).
    pub shots: usize,
    pub out: Option<String>,
    /// Integration step for dissipative pulses and noise traces.
    pub dt: f64,
    /// `None`: all available cores.
    pub workers: Option<usize>,
}

/// One `[noise]` block.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSpec {
    Ou { sigma: f64, tau_c: f64 },
    QuasiStatic { sigma: f64 },
    /// Quasi-static g-factor fluctuations using the system's `delta_g`.
    GFactor,
    Tabulated { file: String, scale: f64, spectrum: TabulatedSpectrum },
    C13 { a_par: f64, a_perp: f64 },
}

impl NoiseSpec {
    pub fn model_name(&self) -> &'static str {
        match self {
            NoiseSpec::Ou { .. } => "ou",
            NoiseSpec::QuasiStatic { .. } => "quasistatic",
            NoiseSpec::GFactor => "g_factor",
            NoiseSpec::Tabulated { .. } => "tabulated",
            NoiseSpec::C13 { .. } => "c13",
        }
    }

    /// Resolves the block against the system it acts on.
    pub fn to_model(&self, system: &SystemConfig) -> NoiseModel {
        match self {
            NoiseSpec::Ou { sigma, tau_c } => NoiseModel::Ou {
                sigma: *sigma,
                tau_c: *tau_c,
            },
            NoiseSpec::QuasiStatic { sigma } => NoiseModel::QuasiStatic { sigma: *sigma },
            NoiseSpec::GFactor => NoiseModel::QuasiStatic {
                sigma: crate::noise::g_noise_sigma(&system.params, &system.field),
            },
            NoiseSpec::Tabulated { scale, spectrum, .. } => NoiseModel::Tabulated(spectrum.scaled(*scale)),
            NoiseSpec::C13 { a_par, a_perp } => NoiseModel::SingleC13 {
                a_par: *a_par,
                a_perp: *a_perp,
                b_mag: system.field.b_mag,
            },
        }
    }
}

/// How CPMG decays are fitted: stretched exponential with the exponent
/// fixed at `exponent`, or floated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpmgFit {
    Fixed,
    Free,
}

/// The `[experiment]` block, minus protocol keys.
#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentSpec {
    Odmr {
        tau_mw: f64,
        /// `None`: centred on the computed qubit frequency.
        f_center: Option<f64>,
        f_span: f64,
        n_points: usize,
    },
    Rabi { durations: ValueList, detuning: f64 },
    Ramsey { delays: ValueList, detuning: f64 },
    Cpmg {
        n_pulses: Vec<usize>,
        total_times: ValueList,
        fit: CpmgFit,
        exponent: f64,
    },
    T1 { waits: ValueList },
    /// Paired (alpha, b_mag) field settings.
    Pumping {
        alphas: ValueList,
        b_mags: ValueList,
        trajectories: usize,
    },
    ReadoutHistogram,
    Ple {
        temperatures: ValueList,
        linewidth: f64,
        /// Relative Gaussian noise applied to each measured peak ratio.
        rel_noise: f64,
    },
}

impl ExperimentSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentSpec::Odmr { .. } => "odmr",
            ExperimentSpec::Rabi { .. } => "rabi",
            ExperimentSpec::Ramsey { .. } => "ramsey",
            ExperimentSpec::Cpmg { .. } => "cpmg",
            ExperimentSpec::T1 { .. } => "t1",
            ExperimentSpec::Pumping { .. } => "pumping",
            ExperimentSpec::ReadoutHistogram => "readout_histogram",
            ExperimentSpec::Ple { .. } => "ple",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub noise: Vec<NoiseSpec>,
    pub experiment: ExperimentSpec,
    pub protocol: Protocol,
    pub run: RunConfig,
}

impl ExperimentConfig {
    pub fn noise_models(&self) -> Vec<NoiseModel> {
        self.noise.iter().map(|n| n.to_model(&self.system)).collect()
    }
}

/// Everything `defaults.cfg` provides.
#[derive(Debug, Clone, PartialEq)]
pub struct Defaults {
    pub system: SystemConfig,
    pub protocol: Protocol,
    pub run: RunConfig,
}

// ---------------------------------------------------------------- key tables

pub(super) const SYSTEM_KEYS: &[(&str, Dim)] = &[
    ("lambda_so", Dim::Frequency),
    ("strain_x", Dim::Frequency),
    ("strain_y", Dim::Frequency),
    ("g_spin", Dim::Dimensionless),
    ("q_orbital", Dim::Dimensionless),
    ("lambda_so_excited", Dim::Frequency),
    ("strain_excited", Dim::Frequency),
    ("q_orbital_excited", Dim::Dimensionless),
    ("tau_optical", Dim::Time),
    ("tau_ub", Dim::Time),
    ("gamma0_phonon", Dim::Rate),
    ("branch_ub", Dim::Dimensionless),
    ("gamma_t1", Dim::Rate),
    ("delta_g", Dim::Dimensionless),
    ("r_max", Dim::Rate),
    ("off_resonant_fraction", Dim::Dimensionless),
    ("eta_collect", Dim::Dimensionless),
    ("dark_count_rate", Dim::Rate),
    ("dead_time", Dim::Time),
    ("b_mag", Dim::Field),
    ("alpha", Dim::Angle),
    ("temperature", Dim::Temperature),
];

fn system_slot<'a>(s: &'a mut SystemConfig, key: &str) -> &'a mut f64 {
    let p = &mut s.params;
    match key {
        "lambda_so" => &mut p.lambda_so,
        "strain_x" => &mut p.strain_x,
        "strain_y" => &mut p.strain_y,
        "g_spin" => &mut p.g_spin,
        "q_orbital" => &mut p.q_orbital,
        "lambda_so_excited" => &mut p.lambda_so_excited,
        "strain_excited" => &mut p.strain_excited,
        "q_orbital_excited" => &mut p.q_orbital_excited,
        "tau_optical" => &mut p.tau_optical,
        "tau_ub" => &mut p.tau_ub,
        "gamma0_phonon" => &mut p.gamma0_phonon,
        "branch_ub" => &mut p.branch_ub,
        "gamma_t1" => &mut p.gamma_t1,
        "delta_g" => &mut p.delta_g,
        "r_max" => &mut p.r_max,
        "off_resonant_fraction" => &mut p.off_resonant_fraction,
        "eta_collect" => &mut p.eta_collect,
        "dark_count_rate" => &mut p.dark_count_rate,
        "dead_time" => &mut p.dead_time,
        "b_mag" => &mut s.field.b_mag,
        "alpha" => &mut s.field.alpha,
        "temperature" => &mut s.temperature,
        _ => unreachable!("system key table and slots disagree on `{key}`"),
    }
}

pub(super) fn system_value(s: &SystemConfig, key: &str) -> f64 {
    let mut c = s.clone();
    *system_slot(&mut c, key)
}

pub(super) const PROTOCOL_KEYS: &[&str] = &[
    "saturation",
    "readout_duration",
    "init_duration",
    "threshold",
    "rabi",
    "pulse_error",
    "init_state",
];

/// Protocol keys that mean something for each experiment kind.
pub(super) fn protocol_keys(kind: &str) -> &'static [&'static str] {
    match kind {
        "odmr" => &["saturation", "readout_duration", "init_duration", "threshold", "pulse_error", "init_state"],
        "pumping" => &["saturation"],
        "readout_histogram" => &["saturation", "readout_duration", "init_duration", "threshold"],
        "ple" => &[],
        _ => PROTOCOL_KEYS,
    }
}

pub(super) fn kind_keys(kind: &str) -> &'static [&'static str] {
    match kind {
        "odmr" => &["tau_mw", "f_center", "f_span", "n_points"],
        "rabi" => &["durations", "detuning"],
        "ramsey" => &["delays", "detuning"],
        "cpmg" => &["n_pulses", "total_times", "fit", "exponent"],
        "t1" => &["waits"],
        "pumping" => &["alphas", "b_mags", "trajectories"],
        "readout_histogram" => &[],
        "ple" => &["temperatures", "linewidth", "rel_noise"],
        _ => &[],
    }
}

const KINDS: &[&str] = &["odmr", "rabi", "ramsey", "cpmg", "t1", "pumping", "readout_histogram", "ple"];
const RUN_KEYS: &[&str] = &["seed", "shots", "out", "dt", "workers"];

// ------------------------------------------------------------------ helpers

fn get<'a>(section: &'a Section, key: &str) -> Option<&'a Entry> {
    section.entries.iter().find(|e| e.key == key)
}

fn require<'a>(section: &'a Section, key: &str) -> Result<&'a Entry, ConfigError> {
    get(section, key).ok_or_else(|| ConfigError::MissingKey {
        line: section.line,
        section: section.name.clone(),
        key: key.into(),
    })
}

fn check_keys(section: &Section, allowed: &[&[&str]]) -> Result<(), ConfigError> {
    for e in &section.entries {
        if !allowed.iter().any(|set| set.contains(&e.key.as_str())) {
            return Err(ConfigError::UnknownKey {
                line: e.line,
                section: section.name.clone(),
                key: e.key.clone(),
            });
        }
    }
    Ok(())
}

fn bad(entry: &Entry, message: impl Into<String>) -> ConfigError {
    ConfigError::BadValue {
        line: entry.line,
        key: entry.key.clone(),
        message: message.into(),
    }
}

fn invalid(line: usize, source: SimError) -> ConfigError {
    ConfigError::Invalid { line, source }
}

fn is_auto(e: &Entry) -> bool {
    e.value == "auto"
}

fn positive(e: &Entry, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(bad(e, "must be positive"))
    }
}

fn non_negative(e: &Entry, v: f64) -> Result<f64, ConfigError> {
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(bad(e, "must be non-negative"))
    }
}

fn non_empty_list(e: &Entry, dim: Dim) -> Result<ValueList, ConfigError> {
    let l = document::list(e, dim)?;
    if l.is_empty() {
        return Err(bad(e, "list is empty"));
    }
    Ok(l)
}

fn count(e: &Entry) -> Result<usize, ConfigError> {
    usize::try_from(document::integer(e)?).map_err(|_| bad(e, "too large"))
}

// ----------------------------------------------------------------- sections

fn parse_system(section: &Section, base: Option<&SystemConfig>) -> Result<SystemConfig, ConfigError> {
    let keys: Vec<&str> = SYSTEM_KEYS.iter().map(|k| k.0).collect();
    check_keys(section, &[&keys])?;
    let mut sys = match base {
        Some(b) => b.clone(),
        None => SystemConfig {
            params: SivParams {
                lambda_so: 0.0,
                strain_x: 0.0,
                strain_y: 0.0,
                g_spin: 0.0,
                q_orbital: 0.0,
                lambda_so_excited: 0.0,
                strain_excited: 0.0,
                q_orbital_excited: 0.0,
                tau_optical: 0.0,
                tau_ub: 0.0,
                gamma0_phonon: 0.0,
                branch_ub: 0.0,
                gamma_t1: 0.0,
                delta_g: 0.0,
                r_max: 0.0,
                off_resonant_fraction: 0.0,
                eta_collect: 0.0,
                dark_count_rate: 0.0,
                dead_time: 0.0,
            },
            field: FieldConfig { b_mag: 0.0, alpha: 0.0 },
            temperature: 0.0,
        },
    };
    for &(key, dim) in SYSTEM_KEYS {
        match get(section, key) {
            Some(e) => *system_slot(&mut sys, key) = document::scalar(e, dim)?,
            None if base.is_none() => return Err(require(section, key).unwrap_err()),
            None => {}
        }
    }
    let line_of = |key: &str| get(section, key).map_or(section.line, |e| e.line);
    sys.params.validate().map_err(|err| {
        let line = match &err {
            SimError::InvalidParameter { name, .. } => line_of(name),
            _ => section.line,
        };
        invalid(line, err)
    })?;
    sys.field.validate().map_err(|err| {
        let line = match &err {
            SimError::InvalidParameter { name, .. } => line_of(name),
            _ => section.line,
        };
        invalid(line, err)
    })?;
    if !(sys.temperature > 0.0 && sys.temperature.is_finite()) {
        return Err(invalid(
            line_of("temperature"),
            SimError::InvalidParameter {
                name: "temperature",
                reason: "must be positive".into(),
            },
        ));
    }
    Ok(sys)
}

fn parse_protocol(section: &Section, keys: &[&str], base: Option<&Protocol>) -> Result<Protocol, ConfigError> {
    let mut p = base.cloned().unwrap_or(Protocol {
        saturation: 0.0,
        readout_duration: 0.0,
        init_duration: None,
        threshold: 0,
        rabi: 0.0,
        pulse_error: 0.0,
        init_state: Spin::Up,
    });
    for &key in keys {
        let Some(e) = get(section, key) else {
            if base.is_none() {
                return Err(require(section, key).unwrap_err());
            }
            continue;
        };
        match key {
            "saturation" => p.saturation = non_negative(e, document::scalar(e, Dim::Dimensionless)?)?,
            "readout_duration" => p.readout_duration = positive(e, document::scalar(e, Dim::Time)?)?,
            "init_duration" => {
                p.init_duration = if is_auto(e) {
                    None
                } else {
                    Some(non_negative(e, document::scalar(e, Dim::Time)?)?)
                }
            }
            "threshold" => p.threshold = document::integer(e)?,
            "rabi" => p.rabi = positive(e, document::scalar(e, Dim::Frequency)?)?,
            "pulse_error" => p.pulse_error = non_negative(e, document::scalar(e, Dim::Dimensionless)?)?,
            "init_state" => {
                p.init_state = match e.value.as_str() {
                    "up" => Spin::Up,
                    "down" => Spin::Down,
                    v => return Err(bad(e, format!("`{v}` is not `up` or `down`"))),
                }
            }
            _ => unreachable!(),
        }
    }
    Ok(p)
}

fn parse_run(section: &Section, base: Option<&RunConfig>) -> Result<RunConfig, ConfigError> {
    check_keys(section, &[RUN_KEYS])?;
    let mut r = base.cloned().unwrap_or(RunConfig {
        seed: 0,
        shots: 0,
        out: None,
        dt: 0.0,
        workers: None,
    });
    for &key in RUN_KEYS {
        let Some(e) = get(section, key) else {
            if base.is_none() && key != "out" {
                return Err(require(section, key).unwrap_err());
            }
            continue;
        };
        match key {
            "seed" => r.seed = document::integer(e)?,
            "shots" => {
                r.shots = count(e)?;
                if r.shots == 0 {
                    return Err(bad(e, "must be at least 1"));
                }
            }
            "out" => r.out = Some(e.value.clone()),
            "dt" => r.dt = positive(e, document::scalar(e, Dim::Time)?)?,
            "workers" => r.workers = if is_auto(e) { None } else { Some(count(e)?) },
            _ => unreachable!(),
        }
    }
    Ok(r)
}

fn parse_noise(section: &Section, base_dir: Option<&Path>) -> Result<NoiseSpec, ConfigError> {
    let model = require(section, "model")?;
    let keys: &[&str] = match model.value.as_str() {
        "ou" => &["sigma", "tau_c"],
        "quasistatic" => &["sigma"],
        "g_factor" => &[],
        "tabulated" => &["file", "scale"],
        "c13" => &["a_par", "a_perp"],
        v => {
            return Err(bad(
                model,
                format!("unknown noise model `{v}` (expected ou, quasistatic, g_factor, tabulated or c13)"),
            ))
        }
    };
    check_keys(section, &[&["model"], keys])?;
    let spec = match model.value.as_str() {
        "ou" => {
            let s = require(section, "sigma")?;
            let t = require(section, "tau_c")?;
            NoiseSpec::Ou {
                sigma: positive(s, document::scalar(s, Dim::Angular)?)?,
                tau_c: positive(t, document::scalar(t, Dim::Time)?)?,
            }
        }
        "quasistatic" => {
            let s = require(section, "sigma")?;
            NoiseSpec::QuasiStatic {
                sigma: non_negative(s, document::scalar(s, Dim::Angular)?)?,
            }
        }
        "g_factor" => NoiseSpec::GFactor,
        "tabulated" => {
            let f = require(section, "file")?;
            let scale = match get(section, "scale") {
                Some(e) => non_negative(e, document::scalar(e, Dim::Dimensionless)?)?,
                None => 1.0,
            };
            let path = match base_dir {
                Some(d) => d.join(&f.value),
                None => PathBuf::from(&f.value),
            };
            let spectrum = TabulatedSpectrum::from_file(&path).map_err(|e| ConfigError::File {
                line: f.line,
                path: f.value.clone(),
                message: e.to_string(),
            })?;
            NoiseSpec::Tabulated {
                file: f.value.clone(),
                scale,
                spectrum,
            }
        }
        "c13" => {
            let a = require(section, "a_par")?;
            let b = require(section, "a_perp")?;
            NoiseSpec::C13 {
                a_par: document::scalar(a, Dim::Frequency)?,
                a_perp: document::scalar(b, Dim::Frequency)?,
            }
        }
        _ => unreachable!(),
    };
    Ok(spec)
}

fn parse_experiment(section: &Section, base: &Protocol) -> Result<(ExperimentSpec, Protocol), ConfigError> {
    let ty = require(section, "type")?;
    let kind = ty.value.as_str();
    if !KINDS.contains(&kind) {
        return Err(bad(ty, format!("unknown experiment type `{kind}` (expected one of {})", KINDS.join(", "))));
    }
    let pkeys = protocol_keys(kind);
    check_keys(section, &[&["type"], kind_keys(kind), pkeys])?;
    let protocol = parse_protocol(section, pkeys, Some(base))?;
    let time_list = |key: &str| -> Result<ValueList, ConfigError> {
        let e = require(section, key)?;
        let l = non_empty_list(e, Dim::Time)?;
        if l.values().iter().any(|v| *v < 0.0) {
            return Err(bad(e, "durations must be non-negative"));
        }
        Ok(l)
    };
    let freq = |key: &str, default: f64| -> Result<f64, ConfigError> {
        get(section, key).map_or(Ok(default), |e| document::scalar(e, Dim::Frequency))
    };
    let spec = match kind {
        "odmr" => {
            let tau = require(section, "tau_mw")?;
            let span = require(section, "f_span")?;
            let n = require(section, "n_points")?;
            let n_points = count(n)?;
            if n_points < 2 {
                return Err(bad(n, "an ODMR sweep needs at least 2 points"));
            }
            ExperimentSpec::Odmr {
                tau_mw: positive(tau, document::scalar(tau, Dim::Time)?)?,
                f_center: match get(section, "f_center") {
                    Some(e) if !is_auto(e) => Some(document::scalar(e, Dim::Frequency)?),
                    _ => None,
                },
                f_span: positive(span, document::scalar(span, Dim::Frequency)?)?,
                n_points,
            }
        }
        "rabi" => ExperimentSpec::Rabi {
            durations: time_list("durations")?,
            detuning: freq("detuning", 0.0)?,
        },
        "ramsey" => ExperimentSpec::Ramsey {
            delays: time_list("delays")?,
            detuning: freq("detuning", 550e3)?,
        },
        "cpmg" => {
            let n = require(section, "n_pulses")?;
            let n_pulses: Vec<usize> = document::integer_list(n)?.into_iter().map(|v| v as usize).collect();
            if n_pulses.iter().any(|&v| v == 0) {
                return Err(bad(n, "pulse counts must be at least 1"));
            }
            let fit = match get(section, "fit").map(|e| (e, e.value.as_str())) {
                None | Some((_, "fixed")) => CpmgFit::Fixed,
                Some((_, "free")) => CpmgFit::Free,
                Some((e, v)) => return Err(bad(e, format!("`{v}` is not `fixed` or `free`"))),
            };
            let exponent = match get(section, "exponent") {
                Some(e) => positive(e, document::scalar(e, Dim::Dimensionless)?)?,
                None => 4.0,
            };
            ExperimentSpec::Cpmg {
                n_pulses,
                total_times: time_list("total_times")?,
                fit,
                exponent,
            }
        }
        "t1" => ExperimentSpec::T1 { waits: time_list("waits")? },
        "pumping" => {
            let a = require(section, "alphas")?;
            let b = require(section, "b_mags")?;
            let alphas = non_empty_list(a, Dim::Angle)?;
            let b_mags = non_empty_list(b, Dim::Field)?;
            if alphas.len() != b_mags.len() {
                return Err(bad(b, format!("{} fields for {} angles", b_mags.len(), alphas.len())));
            }
            let trajectories = match get(section, "trajectories") {
                Some(e) => count(e)?.max(1),
                None => 2000,
            };
            ExperimentSpec::Pumping {
                alphas,
                b_mags,
                trajectories,
            }
        }
        "readout_histogram" => ExperimentSpec::ReadoutHistogram,
        "ple" => {
            let t = require(section, "temperatures")?;
            let temperatures = non_empty_list(t, Dim::Temperature)?;
            if temperatures.values().iter().any(|v| *v <= 0.0) {
                return Err(bad(t, "temperatures must be positive"));
            }
            let lw = require(section, "linewidth")?;
            ExperimentSpec::Ple {
                temperatures,
                linewidth: positive(lw, document::scalar(lw, Dim::Frequency)?)?,
                rel_noise: match get(section, "rel_noise") {
                    Some(e) => non_negative(e, document::scalar(e, Dim::Dimensionless)?)?,
                    None => 0.0,
                },
            }
        }
        _ => unreachable!(),
    };
    Ok((spec, protocol))
}

// ---------------------------------------------------------------- documents

pub(super) fn parse_defaults(text: &str) -> Result<Defaults, ConfigError> {
    let sections = parse_document(text)?;
    let find = |name: &str| -> Result<&Section, ConfigError> {
        sections.iter().find(|s| s.name == name).ok_or_else(|| ConfigError::MissingSection { section: name.into() })
    };
    let protocol_section = find("protocol")?;
    check_keys(protocol_section, &[PROTOCOL_KEYS])?;
    Ok(Defaults {
        system: parse_system(find("system")?, None)?,
        protocol: parse_protocol(protocol_section, PROTOCOL_KEYS, None)?,
        run: parse_run(find("run")?, None)?,
    })
}

/// Parses a config whose relative file references resolve against the
/// current directory.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    parse_config_with_base(text, None)
}

/// Reads and parses a config file; relative paths inside it resolve against
/// its directory.
pub fn parse_config_file(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::File {
        line: 0,
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_config_with_base(&text, path.parent())
}

pub fn parse_config_with_base(text: &str, base_dir: Option<&Path>) -> Result<ExperimentConfig, ConfigError> {
    let defaults = super::defaults();
    let sections = parse_document(text)?;
    let mut system = None;
    let mut run = None;
    let mut experiment = None;
    let mut noise = Vec::new();
    for s in &sections {
        let once = |seen: bool| {
            if seen {
                Err(ConfigError::Duplicate {
                    line: s.line,
                    what: "section",
                    name: s.name.clone(),
                })
            } else {
                Ok(())
            }
        };
        match s.name.as_str() {
            "system" => {
                once(system.is_some())?;
                system = Some(parse_system(s, Some(&defaults.system))?);
            }
            "run" => {
                once(run.is_some())?;
                run = Some(parse_run(s, Some(&defaults.run))?);
            }
            "experiment" => {
                once(experiment.is_some())?;
                experiment = Some(parse_experiment(s, &defaults.protocol)?);
            }
            "noise" => noise.push(parse_noise(s, base_dir)?),
            _ => {
                return Err(ConfigError::UnknownSection {
                    line: s.line,
                    section: s.name.clone(),
                })
            }
        }
    }
    let (experiment, protocol) = experiment.ok_or_else(|| ConfigError::MissingSection {
        section: "experiment".into(),
    })?;
    Ok(ExperimentConfig {
        system: system.unwrap_or_else(|| defaults.system.clone()),
        noise,
        experiment,
        protocol,
        run: run.unwrap_or_else(|| defaults.run.clone()),
    })
}
