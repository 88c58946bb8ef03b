//! Phase and amplitude estimation, flux reconstruction and fringe
//! inversion back to delay and displacement.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::projection::{combined_projection, Window};
use crate::error::{Error, Result};
use crate::fringe::{delay_to_displacement, ClassicalFringeSpec, GeometryFactor, PhotonPairSpec};
use crate::simulate::{check_compatible, TimestampStream};

/// Minimum trace density, samples per period of the fastest component.
pub const SAMPLES_PER_PERIOD: usize = 100;
/// Upper limit on dense trace samples.
pub const MAX_DENSE_SAMPLES: usize = 20_000_000;

/// One refined sinusoid with per-stream amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentEstimate {
    pub f_hat: f64,
    /// Phase at the middle of the exposure, rad.
    pub theta_hat: f64,
    /// Signed amplitude in the coincidence (port-1) stream, events/s.
    pub a_hat_c: f64,
    /// Signed amplitude in the anti-coincidence (port-2) stream, events/s.
    pub a_hat_a: f64,
    pub converged: bool,
}

/// How a normalized probability maps back to delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Inversion {
    /// `τ = arccos[(1 − 2P)/V₀]/Δω`.
    Quantum { delta_omega: f64, v0: f64 },
    /// Port-1 fringe `½[1 + V·cos(ωτ + φ₀)]`, operated on its rising slope.
    Classical { omega_optical: f64, visibility: f64, phase_offset: f64 },
}

impl Inversion {
    pub fn quantum(pair: &PhotonPairSpec, v0: f64) -> Result<Self> {
        if !(v0 > 0.0 && v0 <= 1.0) {
            return Err(Error::invalid("v0", format!("must lie in (0, 1], got {v0}")));
        }
        Ok(Inversion::Quantum { delta_omega: pair.delta_omega, v0 })
    }

    pub fn classical(reference: &ClassicalFringeSpec) -> Self {
        Inversion::Classical {
            omega_optical: reference.omega_optical,
            visibility: reference.visibility(),
            phase_offset: reference.phase_offset,
        }
    }

    fn visibility(&self) -> f64 {
        match *self {
            Inversion::Quantum { v0, .. } => v0,
            Inversion::Classical { visibility, .. } => visibility,
        }
    }

    /// Cosine argument for probability `p`, before clamping.
    fn cosine(&self, p: f64) -> f64 {
        match *self {
            Inversion::Quantum { v0, .. } => (1.0 - 2.0 * p) / v0,
            Inversion::Classical { visibility, .. } => (2.0 * p - 1.0) / visibility,
        }
    }

    fn delay(&self, cosine: f64) -> f64 {
        match *self {
            Inversion::Quantum { delta_omega, .. } => cosine.acos() / delta_omega,
            Inversion::Classical { omega_optical, phase_offset, .. } => (-cosine.acos() - phase_offset) / omega_optical,
        }
    }

    /// |dP/dτ| at mean delay `tau`.
    fn slope(&self, tau: f64) -> f64 {
        match *self {
            Inversion::Quantum { delta_omega, v0 } => 0.5 * v0 * delta_omega * (delta_omega * tau).sin().abs(),
            Inversion::Classical { omega_optical, visibility, phase_offset } => {
                0.5 * visibility * omega_optical * (omega_optical * tau + phase_offset).sin().abs()
            }
        }
    }
}

/// Counts of samples pushed back into the physical range.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClampStats {
    pub samples: usize,
    pub flux_clamped: usize,
    pub arccos_clamped: usize,
}

impl ClampStats {
    pub fn arccos_fraction(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            self.arccos_clamped as f64 / self.samples as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructedSignal {
    pub inversion: Inversion,
    pub components: Vec<ComponentEstimate>,
    /// `N_C/t_exp`, events/s.
    pub a0_c: f64,
    /// `N_A/t_exp`, events/s.
    pub a0_a: f64,
    pub ratio: f64,
    pub v0: f64,
    pub geometry: GeometryFactor,
    pub t_exp: f64,
    /// Mean reconstructed delay, s.
    pub tau_mean: f64,
    /// Stored delay trace starting at t = 0 with step `trace_dt`, s.
    pub tau_trace: Vec<f64>,
    pub trace_dt: f64,
    /// Peak-to-peak displacement over the dense reconstruction, m.
    pub displacement_pp: f64,
    /// Dense samples per period of the fastest component actually used.
    pub samples_per_period: f64,
    /// Linearized peak-to-peak displacement of each component, m.
    pub component_pp: Vec<f64>,
    pub clamps: ClampStats,
}

impl ReconstructedSignal {
    /// Displacement trace `c·(τ̂ − mean τ̂)/g` at the stored samples.
    pub fn displacement_trace(&self) -> Vec<f64> {
        self.tau_trace.iter().map(|&tau| delay_to_displacement(tau - self.tau_mean, self.geometry)).collect()
    }

    /// Reconstructed delay at time `t` from the start of the exposure.
    pub fn delay_at(&self, t: f64) -> f64 {
        let tc = t - self.t_exp / 2.0;
        let mut phi_c = self.a0_c;
        let mut phi_a = self.a0_a;
        for k in &self.components {
            let cos = (TAU * k.f_hat * tc + k.theta_hat).cos();
            phi_c += k.a_hat_c * cos;
            phi_a += k.a_hat_a * cos;
        }
        let (phi_c, phi_a) = (phi_c.max(0.0), phi_a.max(0.0));
        let denom = phi_c + self.ratio * phi_a;
        let p = if denom > 0.0 { phi_c / denom } else { 0.5 };
        self.inversion.delay(self.inversion.cosine(p).clamp(-1.0, 1.0))
    }

    /// Peak-to-peak displacement of the reconstruction over `[t0, t1]`.
    pub fn displacement_pp_between(&self, t0: f64, t1: f64) -> f64 {
        let f_top = self.components.iter().map(|k| k.f_hat).fold(0.0, f64::max);
        let n = (((t1 - t0) * f_top * SAMPLES_PER_PERIOD as f64 * 10.0).ceil() as usize).clamp(2, MAX_DENSE_SAMPLES);
        let dt = (t1 - t0) / (n - 1) as f64;
        let (lo, hi) = (0..n).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
            let tau = self.delay_at(t0 + i as f64 * dt);
            (lo.min(tau), hi.max(tau))
        });
        delay_to_displacement(hi - lo, self.geometry)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Argument of the rectangular-window combined projection, in `(−π, π]`.
pub fn estimate_phase(c: &TimestampStream, a: &TimestampStream, ratio: f64, f_hat: f64) -> Result<f64> {
    if !(f_hat > 0.0) {
        return Err(Error::invalid("f_hat", "must be positive"));
    }
    let y = combined_projection(c, a, ratio, f_hat, Window::Rectangular)?;
    if y.norm() == 0.0 {
        return Err(Error::UndefinedPhase { frequency: f_hat });
    }
    let theta = y.arg();
    Ok(if theta <= -PI { PI } else { theta })
}

/// `â = (2/t_exp)·Σ cos(2πf̂·T′ + θ̂)` and `a₀ = N/t_exp`.
pub fn estimate_amplitudes(stream: &TimestampStream, f_hat: f64, theta_hat: f64) -> Result<(f64, f64)> {
    if !(f_hat > 0.0) {
        return Err(Error::invalid("f_hat", "must be positive"));
    }
    let omega = TAU * f_hat;
    let sum: f64 = stream.centered_times().map(|t| (omega * t + theta_hat).cos()).sum();
    let t_exp = stream.t_exp();
    Ok((2.0 * sum / t_exp, stream.len() as f64 / t_exp))
}

/// Estimates phase and both amplitudes at a refined frequency.
pub fn estimate_component(
    c: &TimestampStream,
    a: &TimestampStream,
    ratio: f64,
    f_hat: f64,
    converged: bool,
) -> Result<ComponentEstimate> {
    let theta_hat = estimate_phase(c, a, ratio, f_hat)?;
    let (a_hat_c, _) = estimate_amplitudes(c, f_hat, theta_hat)?;
    let (a_hat_a, _) = estimate_amplitudes(a, f_hat, theta_hat)?;
    Ok(ComponentEstimate { f_hat, theta_hat, a_hat_c, a_hat_a, converged })
}

/// `ratio = [N_C/p]/[N_A/(1 − p)]` from streams recorded at a fixed delay
/// with known coincidence probability `p`.
pub fn calibrate_ratio(c_cal: &TimestampStream, a_cal: &TimestampStream, known_p: f64) -> Result<f64> {
    if !(known_p > 0.0 && known_p < 1.0) {
        return Err(Error::invalid("known_p", format!("must lie in (0, 1), got {known_p}")));
    }
    check_compatible(c_cal, a_cal)?;
    if a_cal.is_empty() {
        return Err(Error::ZeroCalibrationCount);
    }
    Ok((c_cal.len() as f64 / known_p) / (a_cal.len() as f64 / (1.0 - known_p)))
}

/// Delay from the total counts alone, for a static (non-vibrating) delay.
pub fn static_delay(c: &TimestampStream, a: &TimestampStream, ratio: f64, inversion: &Inversion) -> Result<f64> {
    check_compatible(c, a)?;
    let denom = c.len() as f64 + ratio * a.len() as f64;
    if denom <= 0.0 {
        return Err(Error::ZeroFlux);
    }
    let p = c.len() as f64 / denom;
    Ok(inversion.delay(inversion.cosine(p).clamp(-1.0, 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    /// Samples kept in `tau_trace`; the dense scan is decimated to fit.
    pub max_stored_samples: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions { max_stored_samples: 20_000 }
    }
}

/// Rebuilds both fluxes from the component estimates, normalizes them to a
/// coincidence probability and inverts the fringe.
pub fn reconstruct_with(
    c: &TimestampStream,
    a: &TimestampStream,
    ratio: f64,
    inversion: Inversion,
    g: GeometryFactor,
    components: &[ComponentEstimate],
    options: TraceOptions,
) -> Result<ReconstructedSignal> {
    check_compatible(c, a)?;
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(Error::invalid("ratio", format!("must be positive, got {ratio}")));
    }
    if components.is_empty() {
        return Err(Error::NoComponents);
    }
    let t_exp = c.t_exp();
    let a0_c = c.len() as f64 / t_exp;
    let a0_a = a.len() as f64 / t_exp;
    if a0_c == 0.0 && a0_a == 0.0 {
        return Err(Error::ZeroFlux);
    }

    let f_top = components.iter().map(|k| k.f_hat).fold(0.0, f64::max);
    let wanted = (t_exp * f_top * SAMPLES_PER_PERIOD as f64).ceil() as usize + 1;
    let n = wanted.clamp(SAMPLES_PER_PERIOD + 1, MAX_DENSE_SAMPLES);
    let dt = t_exp / (n - 1) as f64;
    let stride = n.div_ceil(options.max_stored_samples.max(1));

    let mut clamps = ClampStats { samples: n, ..ClampStats::default() };
    let mut tau_trace = Vec::with_capacity(n / stride + 1);
    let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    let mid = t_exp / 2.0;

    // Per-component phasors advanced by rotation; renormalized periodically.
    let mut rot: Vec<(f64, f64)> = components.iter().map(|k| (TAU * k.f_hat * dt).sin_cos()).collect();
    let mut phasor: Vec<(f64, f64)> =
        components.iter().map(|k| (TAU * k.f_hat * -mid + k.theta_hat).sin_cos()).collect();
    let exact =
        |i: usize, j: usize| (TAU * components[j].f_hat * (i as f64 * dt - mid) + components[j].theta_hat).sin_cos();

    for i in 0..n {
        if i % 4096 == 0 && i > 0 {
            for (j, p) in phasor.iter_mut().enumerate() {
                *p = exact(i, j);
            }
        }
        let mut phi_c = a0_c;
        let mut phi_a = a0_a;
        for (k, &(_, cos)) in components.iter().zip(&phasor) {
            phi_c += k.a_hat_c * cos;
            phi_a += k.a_hat_a * cos;
        }
        if phi_c < 0.0 {
            phi_c = 0.0;
            clamps.flux_clamped += 1;
        }
        if phi_a < 0.0 {
            phi_a = 0.0;
            clamps.flux_clamped += 1;
        }
        let denom = phi_c + ratio * phi_a;
        let p = if denom > 0.0 { phi_c / denom } else { 0.5 };
        let mut cosine = inversion.cosine(p);
        if !(-1.0..=1.0).contains(&cosine) {
            cosine = cosine.clamp(-1.0, 1.0);
            clamps.arccos_clamped += 1;
        }
        let tau = inversion.delay(cosine);
        lo = lo.min(tau);
        hi = hi.max(tau);
        sum += tau;
        if i % stride == 0 {
            tau_trace.push(tau);
        }
        for (p, r) in phasor.iter_mut().zip(rot.iter_mut()) {
            let (s, c) = *p;
            let (rs, rc) = *r;
            *p = (s * rc + c * rs, c * rc - s * rs);
        }
    }
    rot.clear();

    let tau_mean = sum / n as f64;
    let s = a0_c + ratio * a0_a;
    let slope = inversion.slope(tau_mean);
    let component_pp = components
        .iter()
        .map(|k| {
            let m = (k.a_hat_c - ratio * k.a_hat_a) / (2.0 * s);
            if slope > 0.0 {
                delay_to_displacement(2.0 * m.abs() / slope, g)
            } else {
                f64::NAN
            }
        })
        .collect();

    Ok(ReconstructedSignal {
        inversion,
        components: components.to_vec(),
        a0_c,
        a0_a,
        ratio,
        v0: inversion.visibility(),
        geometry: g,
        t_exp,
        tau_mean,
        tau_trace,
        trace_dt: dt * stride as f64,
        displacement_pp: delay_to_displacement(hi - lo, g),
        samples_per_period: 1.0 / (dt * f_top),
        component_pp,
        clamps,
    })
}

/// Quantum reconstruction with visibility `v0` and the pair's detuning.
pub fn reconstruct(
    c: &TimestampStream,
    a: &TimestampStream,
    ratio: f64,
    v0: f64,
    pair: &PhotonPairSpec,
    g: GeometryFactor,
    components: &[ComponentEstimate],
) -> Result<ReconstructedSignal> {
    reconstruct_with(c, a, ratio, Inversion::quantum(pair, v0)?, g, components, TraceOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fringe::SPEED_OF_LIGHT;
    use crate::simulate::{sample_seeded, StreamTag};

    fn stream(ticks: Vec<u64>, tag: StreamTag) -> TimestampStream {
        TimestampStream::new(tag, ticks, 100.0, 1.0).unwrap()
    }

    #[test]
    fn calibration_examples() {
        let c = stream((0..100).collect(), StreamTag::Coincidence);
        let a = stream((0..100).collect(), StreamTag::Anticoincidence);
        assert!((calibrate_ratio(&c, &a, 0.5).unwrap() - 1.0).abs() < 1e-15);
        let a3 = stream((0..300).collect(), StreamTag::Anticoincidence);
        assert!((calibrate_ratio(&c, &a3, 0.25).unwrap() - 1.0).abs() < 1e-15);
        let empty = stream(vec![], StreamTag::Anticoincidence);
        assert!(matches!(calibrate_ratio(&c, &empty, 0.5), Err(Error::ZeroCalibrationCount)));
        assert!(calibrate_ratio(&c, &a, 1.0).is_err());
    }

    #[test]
    fn calibrated_ratio_recovers_rate_ratio() {
        // R_C = 2 R_A at quadrature, ~1e6 events in total.
        let c = sample_seeded(|_| 4e5, 4e5, 1.6667, 100.0, StreamTag::Coincidence, 1).unwrap();
        let a = sample_seeded(|_| 2e5, 2e5, 1.6667, 100.0, StreamTag::Anticoincidence, 2).unwrap();
        let r = calibrate_ratio(&c, &a, 0.5).unwrap();
        assert!((r - 2.0).abs() < 0.01, "ratio {r}");
    }

    #[test]
    fn empty_stream_amplitudes() {
        let s = stream(vec![], StreamTag::Coincidence);
        assert_eq!(estimate_amplitudes(&s, 10.0, 0.3).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn amplitude_estimator_on_dense_stream() {
        let (a0, amp, f, theta) = (5e4, 2e4, 13.0, 0.7);
        let t_exp = 1.0;
        let mut errs = Vec::new();
        for seed in 0..20 {
            let flux = |t: f64| a0 + amp * (TAU * f * (t - t_exp / 2.0) + theta).cos();
            let s = sample_seeded(flux, a0 + amp, t_exp, 100.0, StreamTag::Coincidence, seed).unwrap();
            let (a_hat, a0_hat) = estimate_amplitudes(&s, f, theta).unwrap();
            assert_eq!(a0_hat, s.len() as f64);
            errs.push(a_hat - amp);
        }
        let bound = 3.0 * (2.0 * a0 / t_exp).sqrt();
        assert!(errs.iter().all(|e| e.abs() < bound), "{errs:?} vs {bound}");
    }

    #[test]
    fn phase_from_constructed_anti_phase_streams() {
        let f = 10.0;
        let up = |t: f64| 5e4 * (1.0 + 0.3 * (TAU * f * (t - 0.5)).cos());
        let down = |t: f64| 5e4 * (1.0 - 0.3 * (TAU * f * (t - 0.5)).cos());
        let c = sample_seeded(up, 7e4, 1.0, 100.0, StreamTag::Coincidence, 21).unwrap();
        let a = sample_seeded(down, 7e4, 1.0, 100.0, StreamTag::Anticoincidence, 22).unwrap();
        let theta = estimate_phase(&c, &a, 1.0, f).unwrap();
        assert!(theta.abs() < 0.05, "theta {theta}");
        let k = estimate_component(&c, &a, 1.0, f, true).unwrap();
        assert!(k.a_hat_c > 0.0 && k.a_hat_a < 0.0);
        assert!((k.a_hat_c + k.a_hat_a).abs() < 0.1 * k.a_hat_c);
    }

    #[test]
    fn phase_over_grid_of_true_phases() {
        let f = 10.0;
        let mut total = 0.0;
        for (i, theta) in (0..8).map(|i| (i, -PI + (i as f64 + 0.5) * TAU / 8.0)) {
            let up = move |t: f64| 5e4 * (1.0 + 0.2 * (TAU * f * (t - 0.5) + theta).cos());
            let down = move |t: f64| 5e4 * (1.0 - 0.2 * (TAU * f * (t - 0.5) + theta).cos());
            let c = sample_seeded(up, 6e4, 1.0, 100.0, StreamTag::Coincidence, 100 + i).unwrap();
            let a = sample_seeded(down, 6e4, 1.0, 100.0, StreamTag::Anticoincidence, 200 + i).unwrap();
            let est = estimate_phase(&c, &a, 1.0, f).unwrap();
            let err = (est - theta + PI).rem_euclid(TAU) - PI;
            total += err.abs();
        }
        assert!(total / 8.0 < 0.05, "mean abs error {}", total / 8.0);
    }

    #[test]
    fn zero_projection_phase_is_undefined() {
        let s = stream(vec![], StreamTag::Coincidence);
        assert!(matches!(estimate_phase(&s, &s, 1.0, 5.0), Err(Error::UndefinedPhase { .. })));
    }

    #[test]
    fn flat_probability_reconstructs_to_quadrature() {
        let pair = PhotonPairSpec::default();
        let c = stream((0..1000).map(|i| i * 10_000_000).collect(), StreamTag::Coincidence);
        let a = stream((0..1000).map(|i| i * 10_000_000 + 1).collect(), StreamTag::Anticoincidence);
        let comp = ComponentEstimate { f_hat: 10.0, theta_hat: 0.0, a_hat_c: 0.0, a_hat_a: 0.0, converged: true };
        for v0 in [0.5, 0.9, 1.0] {
            let r = reconstruct(&c, &a, 1.0, v0, &pair, GeometryFactor::Single, &[comp]).unwrap();
            assert!((r.tau_mean - pair.quadrature_delay()).abs() < 1e-12 * pair.quadrature_delay());
            assert!(r.displacement_pp.abs() < 1e-20);
            assert!(r.displacement_trace().iter().all(|x| x.abs() < 1e-20));
        }
    }

    #[test]
    fn exact_components_recover_amplitude() {
        // P_C modulated by a 30 nm pp tone; feed the exact flux amplitudes.
        let pair = PhotonPairSpec { sigma: 0.0, ..PhotonPairSpec::default() };
        let g = GeometryFactor::RetroReflected;
        let rate = 1e5;
        let x_amp = 15e-9;
        let phase = pair.delta_omega * g.value() * x_amp / SPEED_OF_LIGHT;
        // P = ½(1 + V0 sin(phase·cos)); Jacobi-Anger first harmonic: V0·J1(phase).
        let j1 = phase / 2.0 - phase.powi(3) / 16.0 + phase.powi(5) / 384.0;
        let a1 = rate * pair.visibility_v0 * j1;
        let c = stream((0..1000).map(|i| i * 10_000_000).collect(), StreamTag::Coincidence);
        let a = stream((0..1000).map(|i| i * 10_000_000 + 1).collect(), StreamTag::Anticoincidence);
        // Scale a0 so that a0 = rate/2 exactly: 1000 events in 1 s, so rescale amplitudes instead.
        let scale = 1000.0 / (rate / 2.0);
        let comp = ComponentEstimate {
            f_hat: 10.0,
            theta_hat: 0.0,
            a_hat_c: a1 * scale,
            a_hat_a: -a1 * scale,
            converged: true,
        };
        let r = reconstruct(&c, &a, 1.0, pair.visibility_v0, &pair, g, &[comp]).unwrap();
        // The first harmonic alone under-represents the arcsine by the J1 ratio.
        let expected_pp = 2.0 * (2.0 * j1).asin() / pair.delta_omega * SPEED_OF_LIGHT / g.value();
        assert!((r.displacement_pp - expected_pp).abs() < 1e-3 * expected_pp, "{} vs {expected_pp}", r.displacement_pp);
        assert!((r.displacement_pp - 30e-9).abs() < 0.1e-9);
        assert_eq!(r.clamps.arccos_clamped, 0);
    }

    #[test]
    fn reconstruct_rejects_bad_inputs() {
        let pair = PhotonPairSpec::default();
        let c = stream(vec![1, 2, 3], StreamTag::Coincidence);
        let comp = ComponentEstimate { f_hat: 10.0, theta_hat: 0.0, a_hat_c: 0.0, a_hat_a: 0.0, converged: true };
        assert!(reconstruct(&c, &c, 0.0, 0.9, &pair, GeometryFactor::Single, &[comp]).is_err());
        assert!(matches!(reconstruct(&c, &c, 1.0, 0.9, &pair, GeometryFactor::Single, &[]), Err(Error::NoComponents)));
        let empty = stream(vec![], StreamTag::Coincidence);
        assert!(matches!(
            reconstruct(&empty, &empty, 1.0, 0.9, &pair, GeometryFactor::Single, &[comp]),
            Err(Error::ZeroFlux)
        ));
    }

    #[test]
    fn static_delay_at_balance_is_quadrature() {
        let pair = PhotonPairSpec::default();
        let c = stream((0..500).collect(), StreamTag::Coincidence);
        let inv = Inversion::quantum(&pair, 1.0).unwrap();
        let tau = static_delay(&c, &c, 1.0, &inv).unwrap();
        assert!((tau - pair.quadrature_delay()).abs() < 1e-12 * tau);
    }
}
