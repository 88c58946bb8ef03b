//! Gaussian-gridding non-uniform FFT used to evaluate projections on the
//! whole detection grid at once.
//!
//! Computes `F(m) = Σ_j c_j·exp(−i2π·m·Δf·t_j)` for `m = 0 … count−1`: the
//! weighted points are spread onto an oversampled uniform grid with a
//! periodic Gaussian, transformed with an FFT, and the Gaussian is divided
//! back out per mode.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Oversampling ratio of the spreading grid.
const OVERSAMPLING: f64 = 2.0;
/// Half-width of the spreading kernel in grid points; ~12 digits at ratio 2.
const SPREAD: usize = 12;

/// Evaluates `Σ_j weights[j]·exp(−i2π·m·spacing·times[j])` for every
/// `m < count`.
///
/// `times` may lie anywhere but the result is only a sum of distinct modes
/// when `spacing·(max t − min t) < 1`, which holds for the detection grid.
pub fn uniform_grid_transform(times: &[f64], weights: &[f64], spacing: f64, count: usize) -> Vec<Complex64> {
    assert_eq!(times.len(), weights.len());
    if count == 0 {
        return Vec::new();
    }
    // Modes k in [−count, count) so that 0..count sit well inside the band.
    let n_modes = 2 * count;
    let n_grid = (OVERSAMPLING as usize) * n_modes;
    let h = TAU / n_grid as f64;
    let tau = PI * SPREAD as f64 / ((n_modes * n_modes) as f64 * OVERSAMPLING * (OVERSAMPLING - 0.5));

    let lo = -(SPREAD as i64) + 1;
    let hi = SPREAD as i64;
    let e3: Vec<f64> = (lo..=hi)
        .map(|l| {
            let d = l as f64 * h;
            (-d * d / (4.0 * tau)).exp()
        })
        .collect();

    let mut grid = vec![0.0f64; n_grid];
    let base = TAU * spacing;
    for (&t, &w) in times.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        let x = (base * t).rem_euclid(TAU);
        let xi = (x / h).floor();
        let diff = x - xi * h;
        let e1 = w * (-diff * diff / (4.0 * tau)).exp();
        let e2 = (diff * h / (2.0 * tau)).exp();
        let xi = xi as i64;
        // Walk l from 0 upward and from −1 downward to reuse powers of e2.
        let mut pow = e1;
        for l in 0..=hi {
            let idx = (xi + l).rem_euclid(n_grid as i64) as usize;
            grid[idx] += pow * e3[(l - lo) as usize];
            pow *= e2;
        }
        let e2_inv = 1.0 / e2;
        let mut pow = e1 * e2_inv;
        for l in (lo..0).rev() {
            let idx = (xi + l).rem_euclid(n_grid as i64) as usize;
            grid[idx] += pow * e3[(l - lo) as usize];
            pow *= e2_inv;
        }
    }

    let mut buffer: Vec<Complex64> = grid.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n_grid).process(&mut buffer);

    let scale = (PI / tau).sqrt() / n_grid as f64;
    (0..count)
        .map(|k| {
            let kf = k as f64;
            buffer[k] * (scale * (kf * kf * tau).exp())
        })
        .collect()
}
