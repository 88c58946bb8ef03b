use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scenario::Scenario;
use crate::error::{Error, Result};
use crate::simulate::VibrationSignal;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// Commanded frequency, Hz.
    pub f_set: f64,
    /// Frequency actually present after playback scaling, Hz.
    pub f_true: f64,
    /// Detected component nearest `f_true`, Hz.
    pub f_hat: Option<f64>,
    /// Linearized peak-to-peak amplitude of that component, m.
    pub amplitude_pp: Option<f64>,
    /// `(f_hat − f_set)/f_set`.
    pub relative_offset: Option<f64>,
    pub failure: Option<String>,
}

impl SweepPoint {
    pub fn detected(&self) -> bool {
        self.f_hat.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub playback_scale: f64,
    pub amplitude_pp: f64,
    pub exposure: f64,
    pub points: Vec<SweepPoint>,
}

impl SweepReport {
    pub fn undetected(&self) -> Vec<f64> {
        self.points.iter().filter(|p| !p.detected()).map(|p| p.f_set).collect()
    }

    pub fn max_abs_offset_error(&self, expected: f64) -> f64 {
        self.points.iter().filter_map(|p| p.relative_offset).map(|o| (o - expected).abs()).fold(0.0, f64::max)
    }
}

/// Discrete sine sweep: one exposure per commanded frequency.
///
/// `playback_scale` multiplies every frequency actually produced, modelling
/// a playback clock error; offsets are reported against the commanded value.
/// A point with no component within one grid spacing of the produced
/// frequency is flagged as undetected.
pub fn run_frequency_sweep(
    f_list: &[f64],
    amplitude_pp: f64,
    per_point_exposure: f64,
    scenario: &Scenario,
    playback_scale: f64,
    seed: u64,
) -> Result<SweepReport> {
    if f_list.is_empty() {
        return Err(Error::invalid("f_list", "sweep needs at least one frequency"));
    }
    if !(playback_scale > 0.0 && playback_scale.is_finite()) {
        return Err(Error::invalid("playback_scale", "must be positive"));
    }
    let mut base = scenario.clone();
    base.t_exp = per_point_exposure;
    let spacing = crate::estimate::GRID_SPACING_FACTOR / per_point_exposure;
    for &f in f_list {
        if !(f > spacing && f * playback_scale < base.analysis.f_max) {
            return Err(Error::invalid("f_list", format!("{f} Hz lies outside the analysis grid")));
        }
    }

    let points = f_list
        .par_iter()
        .enumerate()
        .map(|(i, &f_set)| -> Result<SweepPoint> {
            let f_true = f_set * playback_scale;
            let signal = VibrationSignal::pure_tone(f_true, amplitude_pp, 0.0, base.signal.dc_offset_delay)?;
            let s = base.with_signal(signal);
            let point = match s.run(seed.wrapping_add(i as u64)) {
                Ok((_, analysis)) => {
                    let nearest = analysis.reconstruction.as_ref().and_then(|r| {
                        r.components
                            .iter()
                            .zip(&r.component_pp)
                            .filter(|(k, _)| (k.f_hat - f_true).abs() <= spacing)
                            .min_by(|x, y| (x.0.f_hat - f_true).abs().total_cmp(&(y.0.f_hat - f_true).abs()))
                            .map(|(k, &pp)| (k.f_hat, pp))
                    });
                    match nearest {
                        Some((f_hat, pp)) => SweepPoint {
                            f_set,
                            f_true,
                            f_hat: Some(f_hat),
                            amplitude_pp: Some(pp),
                            relative_offset: Some((f_hat - f_set) / f_set),
                            failure: None,
                        },
                        None => SweepPoint {
                            f_set,
                            f_true,
                            f_hat: None,
                            amplitude_pp: None,
                            relative_offset: None,
                            failure: Some("no component near the produced frequency".into()),
                        },
                    }
                }
                Err(e) => SweepPoint {
                    f_set,
                    f_true,
                    f_hat: None,
                    amplitude_pp: None,
                    relative_offset: None,
                    failure: Some(e.to_string()),
                },
            };
            Ok(point)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SweepReport { playback_scale, amplitude_pp, exposure: per_point_exposure, points })
}
