//! Flux-probing estimation: from two tagged timestamp streams, detect the
//! vibration frequencies, refine them, estimate phases and amplitudes, and
//! reconstruct the delay and displacement waveform.

mod nufft;
mod projection;
mod reconstruct;
mod refine;
mod spectrum;

use serde::{Deserialize, Serialize};

pub use nufft::uniform_grid_transform;
pub use projection::{combined_projection, project_timestamps, window_energy, Window};
pub use reconstruct::{
    calibrate_ratio, estimate_amplitudes, estimate_component, estimate_phase, reconstruct, reconstruct_with,
    static_delay, ClampStats, ComponentEstimate, Inversion, ReconstructedSignal, TraceOptions, MAX_DENSE_SAMPLES,
    SAMPLES_PER_PERIOD,
};
pub use refine::{brent_minimize, refine_frequency, Minimum, RefinedFrequency, MAX_ITERATIONS, TOLERANCE_FRACTION};
pub use spectrum::{
    combined_spectrum, detect_frequencies, detection_threshold, estimate_spectrum, per_bin_false_alarm, FrequencyGrid,
    SpectrumEstimate, GRID_SPACING_FACTOR,
};

use crate::error::Result;
use crate::fringe::{ClassicalFringeSpec, GeometryFactor, PhotonPairSpec};
use crate::simulate::{check_compatible, TimestampStream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisOptions {
    /// False-alarm probability over the whole grid.
    pub p_fa: f64,
    /// Highest grid frequency, Hz.
    pub f_max: f64,
    /// Window used for detection; refinement always uses a rectangular one.
    pub window: Window,
    /// R_C/R_A (or the port-1/port-2 ratio in classical mode).
    pub ratio: f64,
    /// Samples stored in the reconstructed delay trace.
    pub max_trace_samples: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions { p_fa: 1e-3, f_max: 50e3, window: Window::Hann, ratio: 1.0, max_trace_samples: 20_000 }
    }
}

/// Everything the pipeline produced for one pair of streams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub spectrum: SpectrumEstimate,
    pub refined: Vec<RefinedFrequency>,
    /// Seeds that could not be refined because they sit at the lowest bin.
    pub skipped_seeds: Vec<f64>,
    /// `None` when nothing crossed the threshold.
    pub reconstruction: Option<ReconstructedSignal>,
}

impl Analysis {
    pub fn components(&self) -> &[ComponentEstimate] {
        self.reconstruction.as_ref().map(|r| r.components.as_slice()).unwrap_or(&[])
    }

    pub fn detected_frequencies(&self) -> Vec<f64> {
        self.components().iter().map(|k| k.f_hat).collect()
    }
}

/// Runs detection, refinement, component estimation and reconstruction.
///
/// Seeds are refined strongest first; a refined frequency landing within one
/// grid spacing of an already accepted one is dropped as a duplicate.
pub fn analyze(
    c: &TimestampStream,
    a: &TimestampStream,
    options: &AnalysisOptions,
    inversion: Inversion,
    g: GeometryFactor,
) -> Result<Analysis> {
    check_compatible(c, a)?;
    let ratio = options.ratio;
    let spectrum = estimate_spectrum(c, a, ratio, options.f_max, options.p_fa, options.window)?;
    let spacing = spectrum.grid.spacing;

    let mut seeds: Vec<(f64, f64)> =
        spectrum.detected.iter().map(|&f| (f, spectrum.magnitude((f / spacing).round() as usize))).collect();
    seeds.sort_by(|x, y| y.1.total_cmp(&x.1));

    let mut refined: Vec<RefinedFrequency> = Vec::new();
    let mut skipped_seeds = Vec::new();
    for (f_seed, _) in seeds {
        if f_seed <= spacing {
            skipped_seeds.push(f_seed);
            continue;
        }
        let r = refine_frequency(c, a, ratio, f_seed, spacing)?;
        if refined.iter().any(|k| (k.f_hat - r.f_hat).abs() < spacing) {
            continue;
        }
        refined.push(r);
    }
    refined.sort_by(|x, y| x.f_hat.total_cmp(&y.f_hat));

    let components =
        refined.iter().map(|r| estimate_component(c, a, ratio, r.f_hat, r.converged)).collect::<Result<Vec<_>>>()?;

    let reconstruction = if components.is_empty() {
        None
    } else {
        let trace = TraceOptions { max_stored_samples: options.max_trace_samples };
        Some(reconstruct_with(c, a, ratio, inversion, g, &components, trace)?)
    };
    Ok(Analysis { spectrum, refined, skipped_seeds, reconstruction })
}

/// Quantum pipeline on coincidence/anti-coincidence streams.
pub fn quantum_pipeline(
    c: &TimestampStream,
    a: &TimestampStream,
    pair: &PhotonPairSpec,
    g: GeometryFactor,
    options: &AnalysisOptions,
) -> Result<Analysis> {
    analyze(c, a, options, Inversion::quantum(pair, pair.visibility_v0)?, g)
}

/// The same pipeline on port-1/port-2 singles, inverted through a reference
/// classical fringe. A channel that departs from the reference biases the
/// recovered amplitude.
pub fn classical_pipeline(
    p1: &TimestampStream,
    p2: &TimestampStream,
    fringe_ref: &ClassicalFringeSpec,
    g: GeometryFactor,
    options: &AnalysisOptions,
) -> Result<Analysis> {
    analyze(p1, p2, options, Inversion::classical(fringe_ref), g)
}
