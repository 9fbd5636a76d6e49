use super::{init_transition, LaserRole, LinearTarget, PulseSegment, PulseSequence, Sweep, SweepAxis};
use crate::engine::Transition;
use crate::error::{Result, SimError};
use crate::model::Spin;
use std::f64::consts::FRAC_PI_2;

/// Protocol values shared by every builder.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub init_duration: f64,
    pub readout_duration: f64,
    pub saturation: f64,
    /// MW Rabi frequency (Hz); π pulse = 1/(2·rabi).
    pub rabi: f64,
    pub init_state: Spin,
    pub threshold: u64,
    pub pulse_error: f64,
    pub shots: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            init_duration: 15e-3,
            readout_duration: 2e-3,
            saturation: 1.0,
            rabi: 5e6,
            init_state: Spin::Up,
            threshold: 1,
            pulse_error: 0.0,
            shots: 1000,
        }
    }
}

impl Settings {
    fn init(&self) -> PulseSegment {
        PulseSegment::LaserPulse {
            transition: init_transition(self.init_state),
            saturation: self.saturation,
            duration: self.init_duration,
            role: LaserRole::Initialize,
        }
    }

    fn readout(&self) -> PulseSegment {
        PulseSegment::LaserPulse {
            transition: Transition::Down,
            saturation: self.saturation,
            duration: self.readout_duration,
            role: LaserRole::Readout,
        }
    }

    fn mw(&self, duration: f64, detuning: f64, phase: f64) -> PulseSegment {
        PulseSegment::MwPulse {
            rabi: self.rabi,
            detuning,
            phase,
            duration,
        }
    }

    fn pi(&self) -> f64 {
        0.5 / self.rabi
    }

    fn check_rabi(&self) -> Result<()> {
        if !(self.rabi > 0.0 && self.rabi.is_finite()) {
            return Err(SimError::param("rabi", format!("must be positive, got {}", self.rabi)));
        }
        Ok(())
    }

    fn sequence(&self, segments: Vec<PulseSegment>, sweep: Sweep, frame_detuning: f64) -> Result<PulseSequence> {
        let s = PulseSequence {
            segments,
            sweep,
            shots_per_point: self.shots,
            qubit_init: self.init_state,
            frame_detuning,
            threshold: self.threshold,
            pulse_error: self.pulse_error,
        };
        s.validate()?;
        Ok(s)
    }
}

fn durations(name: &str, values: &[f64], targets: Vec<LinearTarget>) -> Sweep {
    Sweep {
        name: name.into(),
        axis: SweepAxis::Duration { targets },
        values: values.to_vec(),
    }
}

fn direct(segment: usize) -> LinearTarget {
    LinearTarget {
        segment,
        scale: 1.0,
        offset: 0.0,
    }
}

/// init → MW pulse of length τ at the swept frequency → readout. The drive
/// is a π pulse on resonance (Rabi frequency 1/(2τ)), so the line is
/// Fourier limited with a width ∝ 1/τ.
pub fn build_odmr(tau_mw: f64, f_center: f64, f_span: f64, n_points: usize, settings: &Settings) -> Result<PulseSequence> {
    if n_points < 2 {
        return Err(SimError::param("n_points", format!("need at least 2, got {n_points}")));
    }
    if !(tau_mw > 0.0) {
        return Err(SimError::param("tau_mw", "must be positive"));
    }
    if !(f_span > 0.0 && f_center.is_finite()) {
        return Err(SimError::param("f_span", "must be positive"));
    }
    let s = Settings {
        rabi: 0.5 / tau_mw,
        ..settings.clone()
    };
    let values = (0..n_points)
        .map(|i| f_center - 0.5 * f_span + f_span * i as f64 / (n_points - 1) as f64)
        .collect();
    let sweep = Sweep {
        name: "f_mw".into(),
        axis: SweepAxis::MwFrequency { segment: 1 },
        values,
    };
    s.sequence(vec![s.init(), s.mw(tau_mw, 0.0, 0.0), s.readout()], sweep, 0.0)
}

/// init → MW pulse of swept length → readout.
pub fn build_rabi(durations_s: &[f64], detuning: f64, settings: &Settings) -> Result<PulseSequence> {
    settings.check_rabi()?;
    let segs = vec![settings.init(), settings.mw(0.0, detuning, 0.0), settings.readout()];
    settings.sequence(segs, durations("duration", durations_s, vec![direct(1)]), detuning)
}

/// init → π/2 → free precession (swept) → π/2 → readout, drive detuned by
/// `detuning` so the signal oscillates at that frequency.
pub fn build_ramsey(delays: &[f64], detuning: f64, settings: &Settings) -> Result<PulseSequence> {
    settings.check_rabi()?;
    let h = 0.5 * settings.pi();
    let segs = vec![
        settings.init(),
        settings.mw(h, detuning, 0.0),
        PulseSegment::Wait { duration: 0.0 },
        settings.mw(h, detuning, 0.0),
        settings.readout(),
    ];
    settings.sequence(segs, durations("delay", delays, vec![direct(2)]), detuning)
}

/// init → π/2ₓ — [T/2N — π_y — T/2N]×N — π/2ₓ → readout.
///
/// T is the total free-evolution time between the centres of the two π/2
/// pulses; π pulses sit at the CPMG centres (2k−1)·T/2N and their finite
/// lengths are taken out of the neighbouring waits.
pub fn build_cpmg(n_pulses: usize, total_times: &[f64], settings: &Settings) -> Result<PulseSequence> {
    if n_pulses == 0 {
        return Err(SimError::param("n_pulses", "must be at least 1"));
    }
    settings.check_rabi()?;
    let pi = settings.pi();
    let h = 0.5 * pi;
    let n = n_pulses as f64;
    let t_min = n * (h + pi);
    if let Some(t) = total_times.iter().find(|t| **t < t_min * (1.0 - 1e-12)) {
        return Err(SimError::Sequence(format!(
            "total time {t:e} s is shorter than the {n_pulses} pulses it must contain ({t_min:e} s)"
        )));
    }
    let mut segs = vec![settings.init(), settings.mw(h, 0.0, 0.0)];
    let mut targets = Vec::new();
    let edge = LinearTarget {
        segment: 0,
        scale: 0.5 / n,
        offset: -0.5 * (h + pi),
    };
    for k in 0..n_pulses {
        targets.push(LinearTarget {
            segment: segs.len(),
            ..if k == 0 {
                edge
            } else {
                LinearTarget {
                    segment: 0,
                    scale: 1.0 / n,
                    offset: -pi,
                }
            }
        });
        segs.push(PulseSegment::Wait { duration: 0.0 });
        segs.push(settings.mw(pi, 0.0, FRAC_PI_2));
    }
    targets.push(LinearTarget { segment: segs.len(), ..edge });
    segs.push(PulseSegment::Wait { duration: 0.0 });
    segs.push(settings.mw(h, 0.0, 0.0));
    segs.push(settings.readout());
    settings.sequence(segs, durations("total_time", total_times, targets), 0.0)
}

/// init → wait (swept) → readout.
pub fn build_t1(waits: &[f64], settings: &Settings) -> Result<PulseSequence> {
    let segs = vec![settings.init(), PulseSegment::Wait { duration: 0.0 }, settings.readout()];
    settings.sequence(segs, durations("wait", waits, vec![direct(1)]), 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cpmg_timing_is_centre_to_centre() {
        let s = Settings::default();
        let seq = build_cpmg(4, &[8e-6], &s).unwrap();
        let (segs, _) = seq.resolve(8e-6, 0.0).unwrap();
        // π/2 + 4 × (wait + π) + wait + π/2 between init and readout
        assert_eq!(segs.len(), 2 + 1 + 4 * 2 + 2);
        let coherent: Vec<_> = segs[1..segs.len() - 1].to_vec();
        // centre of first π/2 to centre of last π/2 is T
        let total: f64 = coherent.iter().map(|s| s.duration()).sum();
        let h = coherent[0].duration();
        assert!((total - h - 8e-6).abs() < 1e-18, "{total}");
        // first π centre at T/2N from the first π/2 centre
        let first_pi_centre = h + coherent[1].duration() + 0.5 * coherent[2].duration();
        assert!((first_pi_centre - 0.5 * h - 1e-6).abs() < 1e-18);
    }

    #[test]
    fn cpmg_rejects_short_times() {
        let s = Settings::default();
        assert!(build_cpmg(32, &[1e-6], &s).is_err());
        assert!(build_cpmg(0, &[1e-3], &s).is_err());
    }

    #[test]
    fn odmr_needs_two_points() {
        assert!(build_odmr(500e-6, 7e9, 20e3, 1, &Settings::default()).is_err());
        let seq = build_odmr(500e-6, 7e9, 20e3, 3, &Settings::default()).unwrap();
        assert_eq!(seq.sweep.values, vec![7e9 - 1e4, 7e9, 7e9 + 1e4]);
        let (segs, frame) = seq.resolve(7e9 + 1e4, 7e9).unwrap();
        assert!(matches!(segs[1], PulseSegment::MwPulse { detuning, rabi, .. } if detuning == -1e4 && rabi == 1e3));
        assert_eq!(frame, -1e4);
    }

    #[test]
    fn single_readout_required() {
        let s = Settings::default();
        let mut seq = build_t1(&[1e-3], &s).unwrap();
        seq.segments.push(s.readout());
        assert!(seq.validate().is_err());
    }
}
