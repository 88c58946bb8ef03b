//! Fixtures shared by the benchmarks in `benches/`.

use qvibe_core::simulate::{simulate_quantum_run, SimulatedRun};
use qvibe_core::{ChannelModel, PhotonPairSpec, VibrationSignal};

/// A 10 Hz, 30 nm tone at `rate` pairs/s per stream.
pub fn tone_run(rate: f64, t_exp: f64, seed: u64) -> SimulatedRun {
    let pair = PhotonPairSpec::default();
    let signal = VibrationSignal::pure_tone(10.0, 30e-9, 0.3, pair.quadrature_delay()).unwrap();
    let channel = ChannelModel { rate_c: rate, rate_a: rate, ..ChannelModel::default() };
    simulate_quantum_run(&pair, &signal, &channel, t_exp, 100.0, seed).unwrap()
}
