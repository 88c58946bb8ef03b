//! Event-stream simulation: vibration signals, channel effects and the
//! Poisson realizations of each detection channel.

mod sampler;
mod signal;
mod stream;

use serde::{Deserialize, Serialize};

pub use sampler::{sample_inhomogeneous_poisson, sample_seeded, stream_rng};
pub use signal::{SignalKind, SinusoidComponent, VibrationSignal};
pub use stream::{
    check_compatible, StreamTag, TimestampStream, BINARY_HEADER_LEN, BINARY_MAGIC, DEFAULT_TICK_PS, FORMAT_VERSION,
    TEXT_MAGIC,
};

use crate::error::{Error, Result};
use crate::fringe::{ClassicalFringeSpec, GeometryFactor, PhotonPairSpec};

/// Loss, background and rate parameters of the detection chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    /// Excess loss L in mode b, in [0, 1).
    pub loss_b: f64,
    /// Background B as a fraction of all detected singles, in [0, 1).
    pub background_fraction: f64,
    /// Coincidence window, s.
    pub coincidence_window: f64,
    /// Maximum coincidence flux R_C, events/s.
    pub rate_c: f64,
    /// Maximum anti-coincidence flux R_A, events/s.
    pub rate_a: f64,
    /// Signal singles rate summed over both detectors before background,
    /// events/s. Drives accidentals in quantum mode and the detected flux in
    /// classical mode.
    pub singles_rate: f64,
    pub geometry: GeometryFactor,
}

impl Default for ChannelModel {
    fn default() -> Self {
        ChannelModel {
            loss_b: 0.0,
            background_fraction: 0.0,
            coincidence_window: 100e-12,
            rate_c: 200_000.0,
            rate_a: 200_000.0,
            singles_rate: 200_000.0,
            geometry: GeometryFactor::RetroReflected,
        }
    }
}

impl ChannelModel {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.loss_b) {
            return Err(Error::invalid("loss_b", format!("must lie in [0, 1), got {}", self.loss_b)));
        }
        if !(0.0..1.0).contains(&self.background_fraction) {
            return Err(Error::invalid(
                "background_fraction",
                format!("must lie in [0, 1), got {}", self.background_fraction),
            ));
        }
        if !(self.coincidence_window.is_finite() && self.coincidence_window > 0.0) {
            return Err(Error::invalid("coincidence_window", "must be positive"));
        }
        if !(self.rate_c.is_finite() && self.rate_c > 0.0) {
            return Err(Error::invalid("rate_c", "must be positive"));
        }
        if !(self.rate_a.is_finite() && self.rate_a > 0.0) {
            return Err(Error::invalid("rate_a", "must be positive"));
        }
        if !(self.singles_rate.is_finite() && self.singles_rate >= 0.0) {
            return Err(Error::invalid("singles_rate", "must be >= 0"));
        }
        Ok(())
    }

    /// Per-detector singles rate including background, `S/(2(1−B))`.
    pub fn inflated_singles_per_detector(&self) -> f64 {
        self.singles_rate / (2.0 * (1.0 - self.background_fraction))
    }

    /// Accidental-coincidence flux `2·w_c·S₁·S₂`, events/s.
    pub fn accidental_flux(&self) -> f64 {
        let s = self.inflated_singles_per_detector();
        2.0 * self.coincidence_window * s * s
    }
}

/// Flux model of the coincidence and anti-coincidence channels.
#[derive(Debug, Clone)]
pub struct QuantumFluxes<'a> {
    pub pair: &'a PhotonPairSpec,
    pub signal: &'a VibrationSignal,
    pub channel: &'a ChannelModel,
    accidental: f64,
}

impl<'a> QuantumFluxes<'a> {
    pub fn accidental(&self) -> f64 {
        self.accidental
    }

    pub fn coincidence(&self, t: f64) -> f64 {
        let p = self.pair.coincidence_probability(self.signal.delay(t, self.channel.geometry));
        (1.0 - self.channel.loss_b) * self.channel.rate_c * p + self.accidental
    }

    pub fn anticoincidence(&self, t: f64) -> f64 {
        let p = self.pair.coincidence_probability(self.signal.delay(t, self.channel.geometry));
        (1.0 - self.channel.loss_b) * self.channel.rate_a * (1.0 - p) + self.accidental
    }

    pub fn coincidence_bound(&self) -> f64 {
        (1.0 - self.channel.loss_b) * self.channel.rate_c + self.accidental
    }

    pub fn anticoincidence_bound(&self) -> f64 {
        (1.0 - self.channel.loss_b) * self.channel.rate_a + self.accidental
    }
}

pub fn quantum_fluxes<'a>(
    pair: &'a PhotonPairSpec,
    signal: &'a VibrationSignal,
    channel: &'a ChannelModel,
) -> QuantumFluxes<'a> {
    QuantumFluxes { pair, signal, channel, accidental: channel.accidental_flux() }
}

/// Flux model of the two classical output ports.
#[derive(Debug, Clone)]
pub struct ClassicalFluxes<'a> {
    pub fringe: &'a ClassicalFringeSpec,
    pub signal: &'a VibrationSignal,
    pub channel: &'a ChannelModel,
    visibility: f64,
    total_rate: f64,
    background_per_port: f64,
}

impl<'a> ClassicalFluxes<'a> {
    /// Fringe visibility under the channel's loss, before background.
    pub fn visibility(&self) -> f64 {
        self.visibility
    }

    /// Signal singles over both ports, `S·(2−L)/2`.
    pub fn total_signal_rate(&self) -> f64 {
        self.total_rate
    }

    pub fn background_per_port(&self) -> f64 {
        self.background_per_port
    }

    fn port_one_probability(&self, t: f64) -> f64 {
        self.fringe.port_one_with_visibility(self.signal.delay(t, self.channel.geometry), self.visibility)
    }

    pub fn port1(&self, t: f64) -> f64 {
        self.total_rate * self.port_one_probability(t) + self.background_per_port
    }

    pub fn port2(&self, t: f64) -> f64 {
        self.total_rate * (1.0 - self.port_one_probability(t)) + self.background_per_port
    }

    pub fn port_bound(&self) -> f64 {
        self.total_rate + self.background_per_port
    }
}

/// Loss on arm b sets the arm intensity ratio to `1 − L`, changing both the
/// visibility and the total rate; background adds a flat flux per port.
pub fn classical_fluxes<'a>(
    fringe: &'a ClassicalFringeSpec,
    signal: &'a VibrationSignal,
    channel: &'a ChannelModel,
) -> ClassicalFluxes<'a> {
    let r = (1.0 - channel.loss_b) * fringe.arm_intensity_ratio;
    let visibility = 2.0 * r.sqrt() / (1.0 + r);
    let total_rate = channel.singles_rate * (1.0 + r) / 2.0;
    let b = channel.background_fraction;
    let background_per_port = b / (1.0 - b) * total_rate / 2.0;
    ClassicalFluxes { fringe, signal, channel, visibility, total_rate, background_per_port }
}

/// Ground truth stored next to simulated streams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub components: Vec<TruthComponent>,
    pub tau_op: f64,
    pub g: GeometryFactor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthComponent {
    /// Frequency, Hz.
    pub f: f64,
    /// Peak-to-peak displacement, m.
    pub app: f64,
    /// Phase relative to the start of the exposure, rad.
    pub phase: f64,
}

impl GroundTruth {
    pub fn new(signal: &VibrationSignal, g: GeometryFactor) -> Self {
        GroundTruth {
            components: signal
                .components
                .iter()
                .map(|c| TruthComponent { f: c.frequency, app: c.amplitude_pp, phase: c.phase })
                .collect(),
            tau_op: signal.dc_offset_delay,
            g,
        }
    }

    pub fn signal(&self) -> VibrationSignal {
        VibrationSignal {
            components: self
                .components
                .iter()
                .map(|c| SinusoidComponent { amplitude_pp: c.app, frequency: c.f, phase: c.phase })
                .collect(),
            dc_offset_delay: self.tau_op,
            kind: SignalKind::MultiTone,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Pair of simulated streams with the waveform that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedRun {
    /// Coincidences, or port-1 singles in classical mode.
    pub first: TimestampStream,
    /// Anti-coincidences, or port-2 singles in classical mode.
    pub second: TimestampStream,
    pub truth: GroundTruth,
}

fn check_exposure(t_exp: f64) -> Result<()> {
    if !(t_exp.is_finite() && t_exp > 0.0) {
        return Err(Error::invalid("t_exp", format!("exposure must be positive, got {t_exp}")));
    }
    Ok(())
}

/// Coincidence and anti-coincidence streams for one exposure.
pub fn simulate_quantum_run(
    pair: &PhotonPairSpec,
    signal: &VibrationSignal,
    channel: &ChannelModel,
    t_exp: f64,
    tick_ps: f64,
    seed: u64,
) -> Result<SimulatedRun> {
    pair.validate()?;
    signal.validate()?;
    channel.validate()?;
    check_exposure(t_exp)?;
    let fluxes = quantum_fluxes(pair, signal, channel);
    let first = sample_inhomogeneous_poisson(
        |t| fluxes.coincidence(t),
        fluxes.coincidence_bound(),
        t_exp,
        tick_ps,
        StreamTag::Coincidence,
        &mut stream_rng(seed, 0),
    )?;
    let second = sample_inhomogeneous_poisson(
        |t| fluxes.anticoincidence(t),
        fluxes.anticoincidence_bound(),
        t_exp,
        tick_ps,
        StreamTag::Anticoincidence,
        &mut stream_rng(seed, 1),
    )?;
    Ok(SimulatedRun { first, second, truth: GroundTruth::new(signal, channel.geometry) })
}

/// Port-1 and port-2 singles streams for one classical exposure.
pub fn simulate_classical_run(
    fringe: &ClassicalFringeSpec,
    signal: &VibrationSignal,
    channel: &ChannelModel,
    t_exp: f64,
    tick_ps: f64,
    seed: u64,
) -> Result<SimulatedRun> {
    fringe.validate()?;
    signal.validate()?;
    channel.validate()?;
    check_exposure(t_exp)?;
    let fluxes = classical_fluxes(fringe, signal, channel);
    let first = sample_inhomogeneous_poisson(
        |t| fluxes.port1(t),
        fluxes.port_bound(),
        t_exp,
        tick_ps,
        StreamTag::SinglesPort1,
        &mut stream_rng(seed, 2),
    )?;
    let second = sample_inhomogeneous_poisson(
        |t| fluxes.port2(t),
        fluxes.port_bound(),
        t_exp,
        tick_ps,
        StreamTag::SinglesPort2,
        &mut stream_rng(seed, 3),
    )?;
    Ok(SimulatedRun { first, second, truth: GroundTruth::new(signal, channel.geometry) })
}
