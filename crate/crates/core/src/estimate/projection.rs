//! Projections of timestamp sets onto windowed Fourier basis functions.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulate::{check_compatible, TimestampStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    #[default]
    Hann,
    Rectangular,
}

impl Window {
    /// Window value at centered time `t` in `[−t_exp/2, t_exp/2]`.
    #[inline]
    pub fn weight(self, t: f64, t_exp: f64) -> f64 {
        match self {
            Window::Hann => {
                let c = (PI * t / t_exp).cos();
                c * c
            }
            Window::Rectangular => 1.0,
        }
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Window::Hann => "hann",
            Window::Rectangular => "rectangular",
        })
    }
}

impl FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hann" => Ok(Window::Hann),
            "rectangular" | "rect" => Ok(Window::Rectangular),
            other => Err(Error::invalid("window", format!("unknown window `{other}`"))),
        }
    }
}

/// `(1/t_exp)·Σ w(T′)·exp(−i2πf·T′)` over centered times `T′`.
pub fn project_timestamps(stream: &TimestampStream, f: f64, window: Window) -> Complex64 {
    let t_exp = stream.t_exp();
    let omega = TAU * f;
    let mut re = 0.0;
    let mut im = 0.0;
    for t in stream.centered_times() {
        let w = window.weight(t, t_exp);
        let (s, c) = (omega * t).sin_cos();
        re += w * c;
        im -= w * s;
    }
    Complex64::new(re, im) / t_exp
}

/// `p_f(C) − ratio·p_f(A)`.
pub fn combined_projection(
    c: &TimestampStream,
    a: &TimestampStream,
    ratio: f64,
    f: f64,
    window: Window,
) -> Result<Complex64> {
    check_compatible(c, a)?;
    Ok(project_timestamps(c, f, window) - ratio * project_timestamps(a, f, window))
}

/// `Σ w²(T′)` over the stream.
pub fn window_energy(stream: &TimestampStream, window: Window) -> f64 {
    match window {
        Window::Rectangular => stream.len() as f64,
        Window::Hann => {
            let t_exp = stream.t_exp();
            stream
                .centered_times()
                .map(|t| {
                    let w = window.weight(t, t_exp);
                    w * w
                })
                .sum()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{sample_seeded, StreamTag};

    #[test]
    fn empty_stream_projects_to_zero() {
        let s = TimestampStream::empty(StreamTag::Coincidence, 100.0, 1.0).unwrap();
        assert_eq!(project_timestamps(&s, 12.3, Window::Hann), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn single_centered_timestamp() {
        // tick 5e9 at 100 ps is exactly t = 0.5 s, the middle of a 1 s exposure.
        let s = TimestampStream::new(StreamTag::Coincidence, vec![5_000_000_000], 100.0, 1.0).unwrap();
        for f in [0.0, 3.3, 1234.5] {
            let p = project_timestamps(&s, f, Window::Rectangular);
            assert!((p - Complex64::new(1.0, 0.0)).norm() < 1e-12);
            let p = project_timestamps(&s, f, Window::Hann);
            assert!((p - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn hann_vanishes_at_exposure_edges() {
        assert!(Window::Hann.weight(0.5, 1.0).abs() < 1e-30);
        assert!(Window::Hann.weight(-0.5, 1.0).abs() < 1e-30);
        assert_eq!(Window::Hann.weight(0.0, 1.0), 1.0);
    }

    #[test]
    fn half_period_shift_flips_phase() {
        let f = 10.0;
        let s = sample_seeded(|t| 1e4 * (1.0 + 0.8 * (TAU * f * t).cos()), 2e4, 1.0, 100.0, StreamTag::Coincidence, 4)
            .unwrap();
        let shift = (0.5 / f / 100e-12) as i64;
        let a = project_timestamps(&s, f, Window::Hann);
        let b = project_timestamps(&s.shifted(shift), f, Window::Hann);
        let diff = (b.arg() - a.arg()).rem_euclid(TAU);
        assert!((diff - PI).abs() < 0.05, "phase difference {diff}");
    }

    #[test]
    fn constant_flux_projection_stays_in_noise() {
        let t_exp = 1.0;
        let f = 17.0 / t_exp;
        let mut exceed = 0;
        for seed in 0..100 {
            let s = sample_seeded(|_| 1e5, 1e5, t_exp, 100.0, StreamTag::Coincidence, seed).unwrap();
            let p = project_timestamps(&s, f, Window::Hann);
            let scale = window_energy(&s, Window::Hann).sqrt() / t_exp;
            if p.norm() >= 3.0 * scale {
                exceed += 1;
            }
        }
        assert!(exceed <= 1, "{exceed} of 100 runs exceeded the noise scale");
    }

    #[test]
    fn projection_is_linear_in_the_stream() {
        let s1 = sample_seeded(|_| 3e3, 3e3, 1.0, 100.0, StreamTag::Coincidence, 1).unwrap();
        let s2 = sample_seeded(|_| 2e3, 2e3, 1.0, 100.0, StreamTag::Coincidence, 2).unwrap();
        let joined = s1.merged(&s2).unwrap();
        for f in [1.0, 77.7, 4321.0] {
            let lhs = project_timestamps(&joined, f, Window::Hann);
            let rhs = project_timestamps(&s1, f, Window::Hann) + project_timestamps(&s2, f, Window::Hann);
            assert!((lhs - rhs).norm() <= 1e-12 * (s1.len() + s2.len()) as f64);
        }
    }
}
