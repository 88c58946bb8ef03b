use std::f64::consts::TAU;

use qvibe_core::estimate::{estimate_amplitudes, estimate_phase};
use qvibe_core::fringe::ClassicalFringeSpec;
use qvibe_core::simulate::{
    sample_seeded, simulate_classical_run, simulate_quantum_run, SimulatedRun, DEFAULT_TICK_PS,
};
use qvibe_core::{ChannelModel, PhotonPairSpec, StreamTag, TimestampStream, VibrationSignal};

/// Asymptotic Kolmogorov critical value at 1% significance.
const KS_CRIT_1PCT: f64 = 1.6276;

fn ks_exponential(stream: &TimestampStream, rate: f64) -> f64 {
    let times: Vec<f64> = stream.times().collect();
    let mut gaps: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.sort_by(f64::total_cmp);
    let n = gaps.len() as f64;
    gaps.iter()
        .enumerate()
        .map(|(i, &g)| {
            let cdf = 1.0 - (-rate * g).exp();
            (cdf - i as f64 / n).abs().max((cdf - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
        * n.sqrt()
}

#[test]
fn constant_flux_gaps_are_exponential() {
    let rate = 10_000.0;
    let seeds = 120;
    let rejected = (0..seeds)
        .filter(|&seed| {
            let s = sample_seeded(|_| rate, rate, 0.2, DEFAULT_TICK_PS, StreamTag::Coincidence, seed).unwrap();
            ks_exponential(&s, rate) > KS_CRIT_1PCT
        })
        .count();
    // Binomial(120, 0.01): six or more rejections has probability < 0.1%.
    assert!(rejected <= 5, "{rejected} of {seeds} seeds rejected");
}

#[test]
fn modulated_flux_histogram_matches() {
    let r = 20_000.0;
    let flux = |t: f64| r * 0.5 * (1.0 + (TAU * 10.0 * t).cos());
    let t_exp = 10.0;
    let s = sample_seeded(flux, r, t_exp, DEFAULT_TICK_PS, StreamTag::Coincidence, 3).unwrap();
    let bins = 400;
    let width = t_exp / bins as f64;
    let mut counts = vec![0u32; bins];
    for t in s.times() {
        counts[((t / width) as usize).min(bins - 1)] += 1;
    }
    for (i, &c) in counts.iter().enumerate() {
        // Exact integral of the flux over the bin.
        let (a, b) = (i as f64 * width, (i + 1) as f64 * width);
        let w = TAU * 10.0;
        let expected = r * 0.5 * ((b - a) + ((w * b).sin() - (w * a).sin()) / w);
        assert!((c as f64 - expected).abs() < 5.0 * expected.sqrt(), "bin {i}: {c} vs {expected}");
    }
}

/// Fundamental modulation depth `â/a₀` of a stream and its standard error.
fn depth(stream: &TimestampStream, theta: f64, f: f64) -> (f64, f64) {
    let (a_hat, a0) = estimate_amplitudes(stream, f, theta).unwrap();
    let t = stream.t_exp();
    (a_hat / a0, (2.0 / (a0 * t)).sqrt())
}

fn quantum_run(loss: f64, t_exp: f64, seed: u64) -> SimulatedRun {
    let pair = PhotonPairSpec::default();
    let signal = VibrationSignal::pure_tone(10.0, 100e-9, 0.4, pair.quadrature_delay()).unwrap();
    let chan = ChannelModel { loss_b: loss, singles_rate: 0.0, ..ChannelModel::default() };
    simulate_quantum_run(&pair, &signal, &chan, t_exp, DEFAULT_TICK_PS, seed).unwrap()
}

#[test]
fn quantum_loss_keeps_modulation_depth() {
    let clean = quantum_run(0.0, 1.0, 5);
    let lossy = quantum_run(0.87, 3.0, 6);
    let theta = estimate_phase(&clean.first, &clean.second, 1.0, 10.0).unwrap();
    let (d0, s0) = depth(&clean.first, theta, 10.0);
    let theta_l = estimate_phase(&lossy.first, &lossy.second, 1.0, 10.0).unwrap();
    let (d1, s1) = depth(&lossy.first, theta_l, 10.0);
    assert!(d0 > 10.0 * s0, "depth {d0} not resolved");
    assert!((d0 - d1).abs() < 2.0 * s0.hypot(s1), "{d0} vs {d1}, sigma {}", s0.hypot(s1));
}

#[test]
fn classical_loss_scales_port_visibility() {
    let pair = PhotonPairSpec::default();
    let tau = pair.quadrature_delay();
    let fringe = ClassicalFringeSpec::at_quadrature(1550e-9, 1.0, tau).unwrap();
    let signal = VibrationSignal::pure_tone(10.0, 100e-9, 0.4, tau).unwrap();
    let run = |loss: f64, seed| {
        let chan = ChannelModel { loss_b: loss, singles_rate: 1.2e6, ..ChannelModel::default() };
        simulate_classical_run(&fringe, &signal, &chan, 1.0, DEFAULT_TICK_PS, seed).unwrap()
    };
    let clean = run(0.0, 1);
    let lossy = run(0.87, 2);
    let theta = estimate_phase(&clean.first, &clean.second, 1.0, 10.0).unwrap();
    let (d0, s0) = depth(&clean.first, theta, 10.0);
    let (d1, s1) = depth(&lossy.first, theta, 10.0);
    let ratio = d1 / d0;
    let sigma = ratio * ((s0 / d0).powi(2) + (s1 / d1).powi(2)).sqrt();
    let expected = 2.0 * 0.13f64.sqrt() / 1.13;
    assert!((ratio - expected).abs() < 2.0 * sigma, "ratio {ratio} vs {expected} (sigma {sigma})");
}

#[test]
fn background_doubles_classical_singles() {
    let tau = PhotonPairSpec::default().quadrature_delay();
    let fringe = ClassicalFringeSpec::at_quadrature(1550e-9, 1.0, tau).unwrap();
    let signal = VibrationSignal::square_wave(10.0, 55e-9, 7, tau).unwrap();
    let count = |b: f64| {
        let chan = ChannelModel { background_fraction: b, singles_rate: 6e5, ..ChannelModel::default() };
        let r = simulate_classical_run(&fringe, &signal, &chan, 1.0, DEFAULT_TICK_PS, 8).unwrap();
        (r.first.len() + r.second.len()) as f64
    };
    let (n0, n1) = (count(0.0), count(0.5));
    assert!((n0 - 6e5).abs() < 5.0 * 6e5f64.sqrt());
    assert!((n1 - 1.2e6).abs() < 5.0 * 1.2e6f64.sqrt());
}

#[test]
fn square_wave_run_sizes() {
    // 3 s at 200k pairs/s is about 0.6M pairs.
    let pair = PhotonPairSpec::default();
    let signal = VibrationSignal::square_wave(10.0, 55e-9, 7, pair.quadrature_delay()).unwrap();
    let run = simulate_quantum_run(&pair, &signal, &ChannelModel::default(), 3.0, DEFAULT_TICK_PS, 2).unwrap();
    let n = (run.first.len() + run.second.len()) as f64;
    assert!((n - 6e5).abs() < 5.0 * 6e5f64.sqrt(), "{n}");
    assert_eq!(run.truth.components.len(), 4);
}

#[test]
fn same_seed_same_ticks() {
    let a = quantum_run(0.0, 0.5, 99);
    let b = quantum_run(0.0, 0.5, 99);
    assert_eq!(a.first.ticks(), b.first.ticks());
    assert_eq!(a.second.ticks(), b.second.ticks());
}
