use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scenario::Scenario;
use crate::error::{Error, Result};
use crate::estimate::Analysis;

/// Result of one simulated exposure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub seed: u64,
    /// Reconstructed peak-to-peak displacement, m.
    pub amplitude_pp: Option<f64>,
    /// Frequency of the strongest detected component, Hz.
    pub f_hat: Option<f64>,
    pub n_components: usize,
    pub events: usize,
    /// Why the trial produced no estimate.
    pub failure: Option<String>,
}

impl TrialOutcome {
    pub fn detected(&self) -> bool {
        self.amplitude_pp.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialStatistics {
    /// Ground-truth peak-to-peak displacement, m.
    pub truth_pp: f64,
    pub trials: Vec<TrialOutcome>,
    pub mean_pp: f64,
    /// Precision σ_x, m.
    pub std_pp: f64,
    /// Accuracy Δx = |truth − mean|, m.
    pub accuracy: f64,
    pub mean_frequency: f64,
    pub std_frequency: f64,
    pub detection_fraction: f64,
}

impl TrialStatistics {
    pub fn failures(&self) -> impl Iterator<Item = &TrialOutcome> {
        self.trials.iter().filter(|t| !t.detected())
    }
}

fn strongest_frequency(analysis: &Analysis) -> Option<f64> {
    let r = analysis.reconstruction.as_ref()?;
    r.components.iter().zip(&r.component_pp).max_by(|x, y| x.1.total_cmp(y.1)).map(|(k, _)| k.f_hat)
}

pub(crate) fn outcome(seed: u64, result: Result<(usize, Analysis)>) -> TrialOutcome {
    match result {
        Ok((events, analysis)) => match &analysis.reconstruction {
            Some(r) => TrialOutcome {
                seed,
                amplitude_pp: Some(r.displacement_pp),
                f_hat: strongest_frequency(&analysis),
                n_components: r.components.len(),
                events,
                failure: None,
            },
            None => TrialOutcome {
                seed,
                amplitude_pp: None,
                f_hat: None,
                n_components: 0,
                events,
                failure: Some("no component crossed the threshold".into()),
            },
        },
        Err(e) => TrialOutcome {
            seed,
            amplitude_pp: None,
            f_hat: None,
            n_components: 0,
            events: 0,
            failure: Some(e.to_string()),
        },
    }
}

/// Mean and sample standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs every seed through simulate and analyze and collects outcomes in
/// seed order.
pub fn run_trials(scenario: &Scenario, seeds: &[u64]) -> Vec<TrialOutcome> {
    seeds
        .par_iter()
        .map(|&seed| {
            let r = scenario.run(seed).map(|(run, a)| (run.first.len() + run.second.len(), a));
            outcome(seed, r)
        })
        .collect()
}

/// Repeated-exposure precision and accuracy of the amplitude estimate.
///
/// Trials with no detection stay in `trials` with their failure reason;
/// statistics use the detected ones and need at least two.
pub fn run_amplitude_trials(scenario: &Scenario, seeds: &[u64]) -> Result<TrialStatistics> {
    if seeds.len() < 2 {
        return Err(Error::invalid("seeds", "need at least two trials"));
    }
    let trials = run_trials(scenario, seeds);
    let pp: Vec<f64> = trials.iter().filter_map(|t| t.amplitude_pp).collect();
    let freqs: Vec<f64> = trials.iter().filter_map(|t| t.f_hat).collect();
    let detection_fraction = pp.len() as f64 / trials.len() as f64;
    let truth_pp = scenario.signal.peak_to_peak();
    let (mean_pp, std_pp, mean_frequency, std_frequency) = if pp.len() >= 2 {
        let (m, s) = mean_std(&pp);
        let (mf, sf) = mean_std(&freqs);
        (m, s, mf, sf)
    } else {
        (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
    };
    Ok(TrialStatistics {
        truth_pp,
        trials,
        mean_pp,
        std_pp,
        accuracy: (truth_pp - mean_pp).abs(),
        mean_frequency,
        std_frequency,
        detection_fraction,
    })
}

/// Amplitude trials for several peak-to-peak values of a pure tone.
///
/// Row `i` uses seeds `base_seed + i·n_trials ..`, so rows share no noise.
pub fn run_amplitude_table(
    scenario: &Scenario,
    frequency: f64,
    amplitudes_pp: &[f64],
    n_trials: usize,
    base_seed: u64,
) -> Result<Vec<TrialStatistics>> {
    use crate::simulate::VibrationSignal;
    amplitudes_pp
        .iter()
        .enumerate()
        .map(|(i, &pp)| {
            let signal = VibrationSignal::pure_tone(frequency, pp, 0.0, scenario.signal.dc_offset_delay)?;
            let first = base_seed.wrapping_add((i * n_trials) as u64);
            let seeds: Vec<u64> = (0..n_trials as u64).map(|j| first.wrapping_add(j)).collect();
            run_amplitude_trials(&scenario.with_signal(signal), &seeds)
        })
        .collect()
}
