use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its physical or numerical domain.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The flux exceeds the bound handed to the thinning sampler.
    #[error("flux {flux} events/s at t = {time} s exceeds the upper bound {bound} events/s")]
    FluxBoundViolated { time: f64, flux: f64, bound: f64 },

    #[error("streams disagree on {what}: {left} vs {right}")]
    StreamMismatch { what: &'static str, left: f64, right: f64 },

    #[error("projection at {frequency} Hz has zero magnitude; phase is undefined")]
    UndefinedPhase { frequency: f64 },

    #[error("reconstructed fluxes vanish everywhere")]
    ZeroFlux,

    #[error("calibration stream has no anti-coincidence counts")]
    ZeroCalibrationCount,

    #[error("no vibration components to reconstruct")]
    NoComponents,

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse { location: location.into(), message: message.into() }
    }
}
