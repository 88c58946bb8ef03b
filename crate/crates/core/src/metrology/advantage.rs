use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scenario::{Mode, Scenario};
use crate::error::{Error, Result};
use crate::estimate::{Analysis, AnalysisOptions, GRID_SPACING_FACTOR};
use crate::fringe::{ClassicalFringeSpec, PhotonPairSpec};
use crate::simulate::{ChannelModel, VibrationSignal, DEFAULT_TICK_PS};

pub const REPORT_NOTE: &str = "pp is taken from the reconstruction built on the recovered harmonics only; \
a truncated set of odd harmonics overshoots the flat tops, so pp can read slightly above the waveform \
that was played";

/// One (loss, background) operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub loss_b: f64,
    pub background_fraction: f64,
}

impl Condition {
    pub fn clean() -> Self {
        Condition { loss_b: 0.0, background_fraction: 0.0 }
    }

    pub fn loss(l: f64) -> Self {
        Condition { loss_b: l, background_fraction: 0.0 }
    }

    pub fn background(b: f64) -> Self {
        Condition { loss_b: 0.0, background_fraction: b }
    }
}

/// Fixed parts of a quantum-versus-classical comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvantageSetup {
    pub pair: PhotonPairSpec,
    /// Lossless classical interferometer, also the analysis reference.
    pub fringe: ClassicalFringeSpec,
    pub signal: VibrationSignal,
    /// Rates for the quantum runs; loss and background come from the schedule.
    pub quantum_channel: ChannelModel,
    pub classical_channel: ChannelModel,
    /// Exposure of a clean quantum run, s.
    pub quantum_exposure: f64,
    /// Exposure of a clean classical run, s.
    pub classical_exposure: f64,
    pub tick_ps: f64,
    pub analysis: AnalysisOptions,
    /// Stretch each exposure so the expected signal events match the clean run.
    pub equalize_counts: bool,
    pub seed: u64,
}

impl AdvantageSetup {
    /// Square-wave comparison at the default rates: 200k pairs/s for 3 s and
    /// 1.2M singles/s for 1 s.
    pub fn square_wave(fundamental: f64, amplitude_pp: f64, n_harmonics: u32) -> Result<Self> {
        let pair = PhotonPairSpec::default();
        let tau_op = pair.quadrature_delay();
        Ok(AdvantageSetup {
            pair,
            fringe: ClassicalFringeSpec::at_quadrature(1550e-9, 1.0, tau_op)?,
            signal: VibrationSignal::square_wave(fundamental, amplitude_pp, n_harmonics, tau_op)?,
            quantum_channel: ChannelModel::default(),
            classical_channel: ChannelModel { singles_rate: 1.2e6, ..ChannelModel::default() },
            quantum_exposure: 3.0,
            classical_exposure: 1.0,
            tick_ps: DEFAULT_TICK_PS,
            analysis: AnalysisOptions { f_max: 1000.0, ..AnalysisOptions::default() },
            equalize_counts: true,
            seed: 1,
        })
    }

    fn scenario(&self, mode: Mode, condition: Condition) -> Scenario {
        let base = match mode {
            Mode::Quantum => self.quantum_channel,
            Mode::Classical => self.classical_channel,
        };
        let t_exp = match mode {
            Mode::Quantum => self.quantum_exposure,
            Mode::Classical => self.classical_exposure,
        };
        let mut s = Scenario {
            mode,
            pair: self.pair,
            fringe: self.fringe,
            signal: self.signal.clone(),
            channel: ChannelModel { loss_b: 0.0, background_fraction: 0.0, ..base },
            t_exp,
            tick_ps: self.tick_ps,
            analysis: self.analysis,
        };
        let clean_rate = s.signal_event_rate();
        s.channel.loss_b = condition.loss_b;
        s.channel.background_fraction = condition.background_fraction;
        if self.equalize_counts {
            s.t_exp = t_exp * clean_rate / s.signal_event_rate();
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    pub exposure: f64,
    pub events: usize,
    /// Peak-to-peak of the reconstructed displacement, m; zero if nothing
    /// was detected.
    pub pp: f64,
    /// Odd harmonics of the fundamental (itself included) above threshold.
    pub harmonics: usize,
    /// Sum of the linearized pp of those harmonics, m.
    pub harmonic_sum_pp: f64,
    /// Linearized pp of the fundamental alone, m.
    pub fundamental_pp: f64,
    pub detected_frequencies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition: Condition,
    pub quantum: PipelineResult,
    pub classical: PipelineResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvantageReport {
    pub truth_pp: f64,
    pub fundamental: f64,
    pub conditions: Vec<ConditionReport>,
    pub note: String,
}

fn summarize(analysis: &Analysis, exposure: f64, events: usize, fundamental: f64) -> PipelineResult {
    let tol = 2.0 * GRID_SPACING_FACTOR / exposure;
    let mut result = PipelineResult {
        exposure,
        events,
        pp: 0.0,
        harmonics: 0,
        harmonic_sum_pp: 0.0,
        fundamental_pp: 0.0,
        detected_frequencies: analysis.detected_frequencies(),
    };
    let Some(r) = &analysis.reconstruction else {
        return result;
    };
    result.pp = r.displacement_pp;
    for (k, &pp) in r.components.iter().zip(&r.component_pp) {
        let order = (k.f_hat / fundamental).round();
        if order >= 1.0 && order as u64 % 2 == 1 && (k.f_hat - order * fundamental).abs() <= tol {
            result.harmonics += 1;
            result.harmonic_sum_pp += pp;
            if order == 1.0 {
                result.fundamental_pp = pp;
            }
        }
    }
    result
}

/// Runs the quantum and classical pipelines at every condition of the
/// schedule.
pub fn run_advantage_experiment(setup: &AdvantageSetup, schedule: &[Condition]) -> Result<AdvantageReport> {
    if schedule.is_empty() {
        return Err(Error::invalid("schedule", "at least one condition is required"));
    }
    let fundamental = setup.signal.components.iter().map(|c| c.frequency).fold(f64::INFINITY, f64::min);
    if !fundamental.is_finite() {
        return Err(Error::invalid("signal", "needs at least one component"));
    }

    let jobs: Vec<(usize, Mode)> =
        (0..schedule.len()).flat_map(|i| [(i, Mode::Quantum), (i, Mode::Classical)]).collect();
    let results = jobs
        .par_iter()
        .map(|&(i, mode)| {
            let s = setup.scenario(mode, schedule[i]);
            let (run, analysis) = s.run(setup.seed.wrapping_add(i as u64))?;
            Ok(summarize(&analysis, s.t_exp, run.first.len() + run.second.len(), fundamental))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut it = results.into_iter();
    let conditions = schedule
        .iter()
        .map(|&condition| {
            let quantum = it.next().expect("one result per job");
            let classical = it.next().expect("one result per job");
            ConditionReport { condition, quantum, classical }
        })
        .collect();
    Ok(AdvantageReport {
        truth_pp: setup.signal.peak_to_peak(),
        fundamental,
        conditions,
        note: REPORT_NOTE.to_string(),
    })
}
