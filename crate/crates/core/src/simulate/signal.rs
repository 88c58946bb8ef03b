//! Ground-truth vibration waveforms.
//!
//! Every waveform is carried as a sparse set of sinusoids so that the same
//! representation feeds the flux model, the ground-truth record and the
//! accuracy scoring.

use std::f64::consts::{FRAC_PI_2, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fringe::{displacement_to_delay, GeometryFactor};

/// One sinusoid, `(pp/2)·cos(2πf·t + phase)` with `t` measured from the
/// start of the exposure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinusoidComponent {
    /// Peak-to-peak displacement, m.
    pub amplitude_pp: f64,
    /// Frequency, Hz.
    pub frequency: f64,
    /// Phase, rad.
    pub phase: f64,
}

impl SinusoidComponent {
    pub fn displacement(&self, t: f64) -> f64 {
        0.5 * self.amplitude_pp * (TAU * self.frequency * t + self.phase).cos()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SignalKind {
    Silent,
    PureTone,
    MultiTone,
    SquareWave {
        fundamental: f64,
        amplitude_pp: f64,
        n_harmonics: u32,
    },
    /// A tone whose frequency and amplitude switch between two settings at
    /// a fixed rate.
    AmplitudeModulated {
        switch_rate: f64,
        low: (f64, f64),
        high: (f64, f64),
    },
    /// One step of a discrete sine sweep.
    SweepStep {
        index: usize,
        set_frequency: f64,
    },
}

/// Displacement waveform plus the static operating-point delay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VibrationSignal {
    pub components: Vec<SinusoidComponent>,
    /// Operating-point delay τ_op, s.
    pub dc_offset_delay: f64,
    pub kind: SignalKind,
}

/// Samples per period used when scanning a waveform for its extremes.
const PP_SAMPLES_PER_PERIOD: usize = 20_000;

impl VibrationSignal {
    pub fn silent(tau_op: f64) -> Self {
        VibrationSignal { components: Vec::new(), dc_offset_delay: tau_op, kind: SignalKind::Silent }
    }

    pub fn pure_tone(frequency: f64, amplitude_pp: f64, phase: f64, tau_op: f64) -> Result<Self> {
        let signal = VibrationSignal {
            components: vec![SinusoidComponent { amplitude_pp, frequency, phase }],
            dc_offset_delay: tau_op,
            kind: SignalKind::PureTone,
        };
        signal.validate()?;
        Ok(signal)
    }

    pub fn multi_tone(components: Vec<SinusoidComponent>, tau_op: f64) -> Result<Self> {
        let signal = VibrationSignal { components, dc_offset_delay: tau_op, kind: SignalKind::MultiTone };
        signal.validate()?;
        Ok(signal)
    }

    /// Odd-harmonic Fourier series of a square wave, harmonics `1, 3, …` up
    /// to and including order `n_harmonics`, with amplitudes `∝ 1/k`.
    ///
    /// The series is scaled so that the truncated waveform itself has
    /// peak-to-peak displacement `amplitude_pp`.
    pub fn square_wave(fundamental: f64, amplitude_pp: f64, n_harmonics: u32, tau_op: f64) -> Result<Self> {
        if n_harmonics == 0 {
            return Err(Error::invalid("n_harmonics", "must be at least 1"));
        }
        let components: Vec<_> = (1..=n_harmonics)
            .step_by(2)
            .map(|k| SinusoidComponent {
                amplitude_pp: 1.0 / k as f64,
                frequency: fundamental * k as f64,
                phase: -FRAC_PI_2,
            })
            .collect();
        let mut signal = VibrationSignal {
            components,
            dc_offset_delay: tau_op,
            kind: SignalKind::SquareWave { fundamental, amplitude_pp, n_harmonics },
        };
        signal.validate()?;
        let unit_pp = signal.peak_to_peak_over(0.0, 1.0 / fundamental);
        for c in &mut signal.components {
            c.amplitude_pp *= amplitude_pp / unit_pp;
        }
        Ok(signal)
    }

    /// A tone alternating every half period of `switch_rate` between
    /// `low = (frequency, pp)` and `high = (frequency, pp)`, expanded into
    /// harmonics of `switch_rate` up to order `n_harmonics`.
    ///
    /// Each half starts from zero displacement on a rising sine.
    pub fn amplitude_modulated(
        switch_rate: f64,
        low: (f64, f64),
        high: (f64, f64),
        n_harmonics: u32,
        tau_op: f64,
    ) -> Result<Self> {
        if !(switch_rate > 0.0) {
            return Err(Error::invalid("switch_rate", "must be positive"));
        }
        let period = 1.0 / switch_rate;
        let half = period / 2.0;
        let n = 1 << 14;
        let dt = period / n as f64;
        let samples: Vec<f64> = (0..n)
            .map(|i| {
                let t = (i as f64 + 0.5) * dt;
                if t < half {
                    0.5 * low.1 * (TAU * low.0 * t).sin()
                } else {
                    0.5 * high.1 * (TAU * high.0 * (t - half)).sin()
                }
            })
            .collect();
        let mut components = Vec::new();
        for k in 1..=n_harmonics {
            let f = k as f64 * switch_rate;
            let coeff: Complex64 = samples
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    let t = (i as f64 + 0.5) * dt;
                    x * Complex64::from_polar(1.0, -TAU * f * t)
                })
                .sum::<Complex64>()
                * (2.0 / n as f64);
            // x(t) ≈ Σ |c| cos(2πft + arg c)
            components.push(SinusoidComponent { amplitude_pp: 2.0 * coeff.norm(), frequency: f, phase: coeff.arg() });
        }
        let largest = components.iter().map(|c| c.amplitude_pp).fold(0.0, f64::max);
        components.retain(|c| c.amplitude_pp > 1e-4 * largest);
        let signal = VibrationSignal {
            components,
            dc_offset_delay: tau_op,
            kind: SignalKind::AmplitudeModulated { switch_rate, low, high },
        };
        signal.validate()?;
        Ok(signal)
    }

    pub fn validate(&self) -> Result<()> {
        for c in &self.components {
            if !(c.frequency.is_finite() && c.frequency > 0.0) {
                return Err(Error::invalid("frequency", format!("must be > 0, got {}", c.frequency)));
            }
            if !(c.amplitude_pp.is_finite() && c.amplitude_pp >= 0.0) {
                return Err(Error::invalid("amplitude_pp", format!("must be >= 0, got {}", c.amplitude_pp)));
            }
            if !c.phase.is_finite() {
                return Err(Error::invalid("phase", "must be finite"));
            }
        }
        if !self.dc_offset_delay.is_finite() {
            return Err(Error::invalid("dc_offset_delay", "must be finite"));
        }
        Ok(())
    }

    pub fn displacement(&self, t: f64) -> f64 {
        self.components.iter().map(|c| c.displacement(t)).sum()
    }

    /// Delay `τ_op + g·x(t)/c`.
    pub fn delay(&self, t: f64, g: GeometryFactor) -> f64 {
        self.dc_offset_delay + displacement_to_delay(self.displacement(t), g)
    }

    pub fn max_frequency(&self) -> Option<f64> {
        self.components.iter().map(|c| c.frequency).reduce(f64::max)
    }

    /// Same waveform with every frequency multiplied by `scale`, e.g. a
    /// playback chain running fast by 0.142% uses `scale = 1.00142`.
    pub fn with_frequency_scale(&self, scale: f64) -> Self {
        let mut out = self.clone();
        for c in &mut out.components {
            c.frequency *= scale;
        }
        out
    }

    /// Peak-to-peak displacement over `[t0, t1]`, scanned densely.
    pub fn peak_to_peak_over(&self, t0: f64, t1: f64) -> f64 {
        let Some(f_max) = self.max_frequency() else {
            return 0.0;
        };
        let n = (((t1 - t0) * f_max).ceil() as usize).max(1) * PP_SAMPLES_PER_PERIOD;
        let n = n.min(50_000_000);
        let dt = (t1 - t0) / n as f64;
        let (lo, hi) = (0..=n).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
            let x = self.displacement(t0 + i as f64 * dt);
            (lo.min(x), hi.max(x))
        });
        hi - lo
    }

    /// Peak-to-peak over one period of the lowest frequency present.
    pub fn peak_to_peak(&self) -> f64 {
        match self.components.iter().map(|c| c.frequency).reduce(f64::min) {
            Some(f_min) => self.peak_to_peak_over(0.0, 1.0 / f_min),
            None => 0.0,
        }
    }
}
