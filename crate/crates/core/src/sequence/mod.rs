//! Pulse-sequence IR, the builders for each measurement, and the shot
//! runner that binds a sequence to the model, the noise and the engines.

mod builders;
mod runner;
mod table;

pub use builders::{build_cpmg, build_odmr, build_rabi, build_ramsey, build_t1, Settings};
pub use runner::{run_experiment, run_pumping, PumpingCase, ShotOutcome};
pub use table::DataTable;

use crate::engine::Transition;
use crate::error::{Result, SimError};
use crate::model::Spin;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LaserRole {
    Initialize,
    Readout,
    Repump,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PulseSegment {
    /// Rotating-frame drive; `detuning` is f_qubit − f_mw (Hz).
    MwPulse {
        rabi: f64,
        detuning: f64,
        phase: f64,
        duration: f64,
    },
    LaserPulse {
        transition: Transition,
        saturation: f64,
        duration: f64,
        role: LaserRole,
    },
    Wait { duration: f64 },
}

impl PulseSegment {
    pub fn duration(&self) -> f64 {
        match *self {
            PulseSegment::MwPulse { duration, .. }
            | PulseSegment::LaserPulse { duration, .. }
            | PulseSegment::Wait { duration } => duration,
        }
    }

    fn set_duration(&mut self, d: f64) {
        match self {
            PulseSegment::MwPulse { duration, .. }
            | PulseSegment::LaserPulse { duration, .. }
            | PulseSegment::Wait { duration } => *duration = d,
        }
    }

    fn validate(&self) -> Result<()> {
        let d = self.duration();
        if !(d >= 0.0 && d.is_finite()) {
            return Err(SimError::param("duration", format!("must be non-negative, got {d}")));
        }
        match *self {
            PulseSegment::MwPulse { rabi, detuning, phase, .. } => {
                if !(rabi >= 0.0 && rabi.is_finite()) {
                    return Err(SimError::param("rabi", format!("must be non-negative, got {rabi}")));
                }
                if !(detuning.is_finite() && phase.is_finite()) {
                    return Err(SimError::param("detuning", "must be finite"));
                }
            }
            PulseSegment::LaserPulse { saturation, .. } => {
                if !(saturation >= 0.0) {
                    return Err(SimError::param("saturation", format!("must be non-negative, got {saturation}")));
                }
            }
            PulseSegment::Wait { .. } => {}
        }
        Ok(())
    }
}

/// `duration = scale·value + offset` for one segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearTarget {
    pub segment: usize,
    pub scale: f64,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "axis", rename_all = "snake_case")]
pub enum SweepAxis {
    /// The swept value is the drive frequency f_mw of one MW segment; its
    /// detuning becomes `f_qubit − value`.
    MwFrequency { segment: usize },
    /// The swept value sets the durations of one or more segments.
    Duration { targets: Vec<LinearTarget> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub name: String,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PulseSequence {
    pub segments: Vec<PulseSegment>,
    pub sweep: Sweep,
    pub shots_per_point: usize,
    /// State the initialization laser prepares.
    pub qubit_init: Spin,
    /// Precession rate (Hz) of the rotating frame during waits; builders set
    /// it to the drive detuning.
    pub frame_detuning: f64,
    /// A shot reads bright when it registers more than this many photons.
    pub threshold: u64,
    /// Relative rms error of each MW pulse's rotation angle.
    pub pulse_error: f64,
}

impl PulseSequence {
    pub fn validate(&self) -> Result<()> {
        if self.shots_per_point == 0 {
            return Err(SimError::param("shots", "must be at least 1"));
        }
        if self.sweep.values.is_empty() {
            return Err(SimError::EmptyInput("sweep values"));
        }
        if self.sweep.values.iter().any(|v| !v.is_finite()) {
            return Err(SimError::param("sweep", "values must be finite"));
        }
        if !(self.pulse_error >= 0.0 && self.pulse_error.is_finite()) {
            return Err(SimError::param("pulse_error", "must be non-negative"));
        }
        let readouts = self
            .segments
            .iter()
            .filter(|s| matches!(s, PulseSegment::LaserPulse { role: LaserRole::Readout, .. }))
            .count();
        if readouts != 1 {
            return Err(SimError::Sequence(format!("exactly one readout laser pulse required, found {readouts}")));
        }
        for (i, s) in self.segments.iter().enumerate() {
            s.validate().map_err(|e| e.in_segment(i))?;
        }
        let n = self.segments.len();
        match &self.sweep.axis {
            SweepAxis::MwFrequency { segment } => {
                if !matches!(self.segments.get(*segment), Some(PulseSegment::MwPulse { .. })) {
                    return Err(SimError::Sequence(format!("sweep references segment {segment}, which is not a MW pulse")));
                }
            }
            SweepAxis::Duration { targets } => {
                if targets.is_empty() {
                    return Err(SimError::Sequence("duration sweep without targets".into()));
                }
                if let Some(t) = targets.iter().find(|t| t.segment >= n) {
                    return Err(SimError::Sequence(format!("sweep references segment {} of {n}", t.segment)));
                }
            }
        }
        Ok(())
    }

    /// Segments of sweep point `value`, with the drive frame detuning.
    /// `f_qubit` resolves frequency sweeps.
    pub fn resolve(&self, value: f64, f_qubit: f64) -> Result<(Vec<PulseSegment>, f64)> {
        let mut segs = self.segments.clone();
        let mut frame = self.frame_detuning;
        match &self.sweep.axis {
            SweepAxis::MwFrequency { segment } => {
                if let PulseSegment::MwPulse { detuning, .. } = &mut segs[*segment] {
                    *detuning = f_qubit - value;
                    frame = f_qubit - value;
                }
            }
            SweepAxis::Duration { targets } => {
                for t in targets {
                    let d = t.scale * value + t.offset;
                    if d < -1e-15 * value.abs().max(1e-300) {
                        return Err(SimError::Sequence(format!(
                            "sweep value {value:e} gives segment {} a negative duration ({d:e} s): pulses do not fit",
                            t.segment
                        )));
                    }
                    segs[t.segment].set_duration(d.max(0.0));
                }
            }
        }
        Ok((segs, frame))
    }

    /// Longest coherent (MW + wait) stretch over all sweep points.
    pub(crate) fn max_coherent_time(&self, f_qubit: f64) -> Result<f64> {
        let mut best = 0.0f64;
        for &v in &self.sweep.values {
            let (segs, _) = self.resolve(v, f_qubit)?;
            let t: f64 = segs.iter().filter(|s| !matches!(s, PulseSegment::LaserPulse { .. })).map(|s| s.duration()).sum();
            best = best.max(t);
        }
        Ok(best)
    }
}

/// Laser transition whose optical pumping leaves the spin in `target`.
pub fn init_transition(target: Spin) -> Transition {
    match target {
        Spin::Up => Transition::Down,
        Spin::Down => Transition::Up,
    }
}
