//! Inhomogeneous Poisson sampling by thinning.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use super::stream::{StreamTag, TimestampStream};
use crate::error::{Error, Result};

/// Grid points checked against the bound before sampling starts.
const BOUND_CHECK_POINTS: usize = 8192;

/// Deterministic RNG for `(seed, stream)`; distinct streams are independent.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Samples detection times with intensity `flux(t)` on `[0, t_exp)`.
///
/// Candidates arrive homogeneously at `flux_upper_bound` and each survives
/// with probability `flux(t)/flux_upper_bound`. Surviving times are floored
/// to ticks of `tick_ps` picoseconds.
pub fn sample_inhomogeneous_poisson<F, R>(
    flux: F,
    flux_upper_bound: f64,
    t_exp: f64,
    tick_ps: f64,
    tag: StreamTag,
    rng: &mut R,
) -> Result<TimestampStream>
where
    F: Fn(f64) -> f64,
    R: Rng + ?Sized,
{
    if !(t_exp.is_finite() && t_exp > 0.0) {
        return Err(Error::invalid("t_exp", format!("must be positive, got {t_exp}")));
    }
    if !(flux_upper_bound.is_finite() && flux_upper_bound >= 0.0) {
        return Err(Error::invalid("flux_upper_bound", format!("must be finite and >= 0, got {flux_upper_bound}")));
    }
    for i in 0..=BOUND_CHECK_POINTS {
        let t = t_exp * i as f64 / BOUND_CHECK_POINTS as f64;
        check_bound(&flux, t, flux_upper_bound)?;
    }
    let tick = tick_ps * 1e-12;
    let mut ticks = Vec::with_capacity((flux_upper_bound * t_exp * 0.6) as usize + 16);
    if flux_upper_bound > 0.0 {
        let mut t = 0.0;
        loop {
            let gap: f64 = Exp1.sample(rng);
            t += gap / flux_upper_bound;
            if t >= t_exp {
                break;
            }
            let value = check_bound(&flux, t, flux_upper_bound)?;
            if rng.random::<f64>() * flux_upper_bound < value {
                let mut k = (t / tick).floor() as u64;
                while k > 0 && k as f64 * tick >= t_exp {
                    k -= 1;
                }
                ticks.push(k);
            }
        }
    }
    TimestampStream::new(tag, ticks, tick_ps, t_exp)
}

fn check_bound<F: Fn(f64) -> f64>(flux: &F, t: f64, bound: f64) -> Result<f64> {
    let value = flux(t);
    if !(value <= bound * (1.0 + 1e-12)) {
        return Err(Error::FluxBoundViolated { time: t, flux: value, bound });
    }
    Ok(value)
}

/// Convenience wrapper seeding a fresh generator.
pub fn sample_seeded<F: Fn(f64) -> f64>(
    flux: F,
    flux_upper_bound: f64,
    t_exp: f64,
    tick_ps: f64,
    tag: StreamTag,
    seed: u64,
) -> Result<TimestampStream> {
    sample_inhomogeneous_poisson(flux, flux_upper_bound, t_exp, tick_ps, tag, &mut stream_rng(seed, 0))
}
