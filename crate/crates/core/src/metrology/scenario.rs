use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::estimate::{classical_pipeline, quantum_pipeline, Analysis, AnalysisOptions};
use crate::fringe::{ClassicalFringeSpec, PhotonPairSpec};
use crate::simulate::{
    simulate_classical_run, simulate_quantum_run, ChannelModel, SimulatedRun, VibrationSignal, DEFAULT_TICK_PS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Quantum,
    Classical,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Quantum => "quantum",
            Mode::Classical => "classical",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quantum" => Ok(Mode::Quantum),
            "classical" => Ok(Mode::Classical),
            other => Err(Error::invalid("mode", format!("expected quantum or classical, got {other:?}"))),
        }
    }
}

/// One simulate-then-analyze configuration.
///
/// In classical mode `fringe` is both the lossless interferometer that the
/// channel degrades and the reference the analysis inverts through.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub mode: Mode,
    pub pair: PhotonPairSpec,
    pub fringe: ClassicalFringeSpec,
    pub signal: VibrationSignal,
    pub channel: ChannelModel,
    pub t_exp: f64,
    pub tick_ps: f64,
    pub analysis: AnalysisOptions,
}

impl Scenario {
    /// Quantum scenario with the default pair, channel and analysis.
    pub fn quantum(signal: VibrationSignal, t_exp: f64) -> Self {
        let pair = PhotonPairSpec::default();
        let fringe = ClassicalFringeSpec::at_quadrature(1550e-9, 1.0, pair.quadrature_delay())
            .expect("default reference fringe");
        Scenario {
            mode: Mode::Quantum,
            pair,
            fringe,
            signal,
            channel: ChannelModel::default(),
            t_exp,
            tick_ps: DEFAULT_TICK_PS,
            analysis: AnalysisOptions::default(),
        }
    }

    pub fn with_signal(&self, signal: VibrationSignal) -> Self {
        Scenario { signal, ..self.clone() }
    }

    pub fn simulate(&self, seed: u64) -> Result<SimulatedRun> {
        match self.mode {
            Mode::Quantum => {
                simulate_quantum_run(&self.pair, &self.signal, &self.channel, self.t_exp, self.tick_ps, seed)
            }
            Mode::Classical => {
                simulate_classical_run(&self.fringe, &self.signal, &self.channel, self.t_exp, self.tick_ps, seed)
            }
        }
    }

    pub fn analyze(&self, run: &SimulatedRun) -> Result<Analysis> {
        let g = self.channel.geometry;
        match self.mode {
            Mode::Quantum => quantum_pipeline(&run.first, &run.second, &self.pair, g, &self.analysis),
            Mode::Classical => classical_pipeline(&run.first, &run.second, &self.fringe, g, &self.analysis),
        }
    }

    pub fn run(&self, seed: u64) -> Result<(SimulatedRun, Analysis)> {
        let run = self.simulate(seed)?;
        let analysis = self.analyze(&run)?;
        Ok((run, analysis))
    }

    /// Mean detected signal events per second over both streams, ignoring
    /// accidentals and background.
    pub fn signal_event_rate(&self) -> f64 {
        let ch = &self.channel;
        match self.mode {
            Mode::Quantum => (1.0 - ch.loss_b) * (ch.rate_c + ch.rate_a) / 2.0,
            Mode::Classical => ch.singles_rate * (1.0 + (1.0 - ch.loss_b) * self.fringe.arm_intensity_ratio) / 2.0,
        }
    }
}
