use qvibe_core::estimate::quantum_pipeline;
use qvibe_core::simulate::{simulate_quantum_run, DEFAULT_TICK_PS};
use qvibe_core::{AnalysisOptions, ChannelModel, GeometryFactor, PhotonPairSpec, VibrationSignal};

fn nm(x: f64) -> f64 {
    x * 1e9
}

#[test]
fn alternating_tone_scenario() {
    // 25 Hz switching between 50 Hz at 36 nm and 100 Hz at 22 nm, 10 s, about 2.1M pairs.
    let pair = PhotonPairSpec::default();
    let signal =
        VibrationSignal::amplitude_modulated(25.0, (50.0, 36e-9), (100.0, 22e-9), 40, pair.quadrature_delay()).unwrap();
    let chan = ChannelModel { rate_c: 210_000.0, rate_a: 210_000.0, ..ChannelModel::default() };
    let run = simulate_quantum_run(&pair, &signal, &chan, 10.0, DEFAULT_TICK_PS, 2024).unwrap();
    let total = (run.first.len() + run.second.len()) as f64;
    assert!((total - 2.1e6).abs() < 5.0 * 2.1e6f64.sqrt(), "{total}");

    let options = AnalysisOptions { f_max: 2000.0, ..AnalysisOptions::default() };
    let analysis = quantum_pipeline(&run.first, &run.second, &pair, GeometryFactor::RetroReflected, &options).unwrap();
    let found = analysis.detected_frequencies();
    for f in [25.0, 50.0, 75.0, 100.0, 125.0] {
        assert!(found.iter().any(|&g| (g - f).abs() < 0.1), "{f} Hz missing from {found:?}");
    }

    let rec = analysis.reconstruction.unwrap();
    let portion = |offset: f64| {
        let n = 100;
        (0..n)
            .map(|k| {
                let t0 = 2.0 + k as f64 * 0.04 + offset;
                rec.displacement_pp_between(t0, t0 + 0.02)
            })
            .sum::<f64>()
            / n as f64
    };
    let (slow, fast) = (portion(0.0), portion(0.02));
    assert!((nm(slow) - 35.0).abs() < 3.0, "50 Hz portion {:.1} nm", nm(slow));
    assert!((nm(fast) - 23.0).abs() < 3.0, "100 Hz portion {:.1} nm", nm(fast));
    assert!(rec.clamps.arccos_fraction() < 0.01);
}

#[test]
fn ten_hertz_thirty_nanometres() {
    let pair = PhotonPairSpec::default();
    let signal = VibrationSignal::pure_tone(10.0, 30e-9, 0.7, pair.quadrature_delay()).unwrap();
    let chan = ChannelModel { rate_c: 190_000.0, rate_a: 190_000.0, ..ChannelModel::default() };
    let run = simulate_quantum_run(&pair, &signal, &chan, 1.0, DEFAULT_TICK_PS, 31).unwrap();
    let analysis =
        quantum_pipeline(&run.first, &run.second, &pair, GeometryFactor::RetroReflected, &AnalysisOptions::default())
            .unwrap();
    assert_eq!(analysis.spectrum.detected.len(), 1, "{:?}", analysis.spectrum.detected);
    assert!((9.4..=10.6).contains(&analysis.spectrum.detected[0]));
    let rec = analysis.reconstruction.unwrap();
    assert!((nm(rec.displacement_pp) - 30.0).abs() < 2.0, "{:.2} nm", nm(rec.displacement_pp));
    assert_eq!(rec.clamps.arccos_clamped, 0);
}

#[test]
fn square_wave_harmonic_seeds() {
    let pair = PhotonPairSpec::default();
    let signal = VibrationSignal::square_wave(10.0, 55e-9, 7, pair.quadrature_delay()).unwrap();
    let run = simulate_quantum_run(&pair, &signal, &ChannelModel::default(), 3.0, DEFAULT_TICK_PS, 77).unwrap();
    let options = AnalysisOptions { f_max: 1000.0, ..AnalysisOptions::default() };
    let analysis = quantum_pipeline(&run.first, &run.second, &pair, GeometryFactor::RetroReflected, &options).unwrap();
    let seeds = &analysis.spectrum.detected;
    for f in [10.0, 30.0, 50.0, 70.0] {
        assert!(seeds.iter().any(|&s| (s - f).abs() <= 0.2), "no seed near {f} Hz in {seeds:?}");
    }
    assert!(seeds.iter().all(|&s| ((s / 10.0).round() as u64) % 2 == 1), "even harmonic in {seeds:?}");
}
