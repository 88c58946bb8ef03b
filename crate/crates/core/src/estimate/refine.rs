//! Off-grid frequency refinement.

use serde::{Deserialize, Serialize};

use super::projection::{combined_projection, Window};
use crate::error::{Error, Result};
use crate::simulate::{check_compatible, TimestampStream};

/// Iteration cap for the scalar optimizer.
pub const MAX_ITERATIONS: usize = 100;
/// Convergence tolerance as a fraction of the grid spacing.
pub const TOLERANCE_FRACTION: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Brent's method: golden-section search with parabolic interpolation,
/// minimizing `f` on `[lower, upper]`. Stops once the bracket around the
/// minimizer is narrower than `2·abs_tol` on each side.
pub fn brent_minimize<F: FnMut(f64) -> f64>(
    mut f: F,
    lower: f64,
    upper: f64,
    abs_tol: f64,
    max_iter: usize,
) -> Minimum {
    const GOLDEN: f64 = 0.381_966_011_250_105_1;
    let (mut a, mut b) = if lower <= upper { (lower, upper) } else { (upper, lower) };
    let mut x = a + GOLDEN * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x);
    let (mut fw, mut fv) = (fx, fx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;

    for iter in 0..max_iter {
        let m = 0.5 * (a + b);
        let tol1 = abs_tol * 0.5 + 2.0 * f64::EPSILON * x.abs();
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            return Minimum { x, value: fx, iterations: iter, converged: true };
        }

        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            } else {
                q = -q;
            }
            if p.abs() < (0.5 * q * e).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if x < m { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x < m { b - x } else { a - x };
            d = GOLDEN * e;
        }

        let u = if d.abs() >= tol1 {
            x + d
        } else if d > 0.0 {
            x + tol1
        } else {
            x - tol1
        };
        let fu = f(u);
        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Minimum { x, value: fx, iterations: max_iter, converged: false }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinedFrequency {
    pub f_hat: f64,
    /// |y| at `f_hat` with the rectangular window.
    pub magnitude: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Maximizes the rectangular-window `|y_f|` over `[f_seed − Δf, f_seed + Δf]`.
///
/// A run that hits the iteration cap is returned with `converged = false`
/// and `f_hat = f_seed`.
pub fn refine_frequency(
    c: &TimestampStream,
    a: &TimestampStream,
    ratio: f64,
    f_seed: f64,
    spacing: f64,
) -> Result<RefinedFrequency> {
    if !(spacing > 0.0) {
        return Err(Error::invalid("spacing", "must be positive"));
    }
    if !(f_seed > spacing) {
        return Err(Error::invalid("f_seed", format!("seed {f_seed} Hz must exceed the grid spacing {spacing} Hz")));
    }
    check_compatible(c, a)?;
    let objective = |f: f64| -combined_projection(c, a, ratio, f, Window::Rectangular).map(|y| y.norm()).unwrap_or(0.0);
    let min =
        brent_minimize(objective, f_seed - spacing, f_seed + spacing, TOLERANCE_FRACTION * spacing, MAX_ITERATIONS);
    if min.converged {
        Ok(RefinedFrequency { f_hat: min.x, magnitude: -min.value, converged: true, iterations: min.iterations })
    } else {
        let magnitude = -objective(f_seed);
        Ok(RefinedFrequency { f_hat: f_seed, magnitude, converged: false, iterations: min.iterations })
    }
}
