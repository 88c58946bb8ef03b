//! Quantum Cramér-Rao bound on delay and its Monte-Carlo check.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{static_delay, Inversion};
use crate::fringe::PhotonPairSpec;
use crate::simulate::{simulate_quantum_run, ChannelModel, VibrationSignal, DEFAULT_TICK_PS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QcrbQuery {
    pub n_pairs: u64,
    pub pair: PhotonPairSpec,
}

/// `σ_τ ≥ 1/(√N·√(Δω² + 4σ²))`, seconds.
pub fn qcrb_delay_std(q: &QcrbQuery) -> Result<f64> {
    if q.n_pairs == 0 {
        return Err(Error::invalid("n_pairs", "must be at least 1"));
    }
    let dw = q.pair.delta_omega;
    let s = q.pair.sigma;
    Ok(1.0 / ((q.n_pairs as f64).sqrt() * (dw * dw + 4.0 * s * s).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticDelayStudy {
    pub expected_pairs: f64,
    pub trials: usize,
    pub bound: f64,
    pub empirical_std: f64,
    /// Empirical std over the bound.
    pub ratio: f64,
    /// Standard error of `ratio` from the finite trial count.
    pub ratio_std_error: f64,
    /// Bound over empirical std.
    pub saturation: f64,
    pub mean_delay: f64,
}

/// Repeats static-delay estimation at the quadrature point.
///
/// Each trial simulates coincidence and anti-coincidence streams for a
/// silent signal with `expected_pairs` pairs on average and inverts the
/// count ratio through the fringe.
pub fn static_delay_study(
    pair: &PhotonPairSpec,
    expected_pairs: f64,
    trials: usize,
    base_seed: u64,
) -> Result<StaticDelayStudy> {
    use rayon::prelude::*;

    if trials < 2 {
        return Err(Error::invalid("trials", "need at least two trials"));
    }
    let rate = 200_000.0;
    let channel = ChannelModel { rate_c: rate, rate_a: rate, singles_rate: 0.0, ..ChannelModel::default() };
    let t_exp = expected_pairs / rate;
    let signal = VibrationSignal::silent(pair.quadrature_delay());
    let inversion = Inversion::quantum(pair, pair.visibility_v0)?;

    let delays = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let run = simulate_quantum_run(pair, &signal, &channel, t_exp, DEFAULT_TICK_PS, base_seed + i)?;
            static_delay(&run.first, &run.second, 1.0, &inversion)
        })
        .collect::<Result<Vec<f64>>>()?;

    let n = delays.len() as f64;
    let mean = delays.iter().sum::<f64>() / n;
    let var = delays.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let empirical_std = var.sqrt();
    let bound = qcrb_delay_std(&QcrbQuery { n_pairs: expected_pairs.round() as u64, pair: *pair })?;
    let ratio = empirical_std / bound;
    Ok(StaticDelayStudy {
        expected_pairs,
        trials,
        bound,
        empirical_std,
        ratio,
        ratio_std_error: ratio / (2.0 * (n - 1.0)).sqrt(),
        saturation: bound / empirical_std,
        mean_delay: mean,
    })
}
