//! Simulation and flux-probing analysis for two-photon interference
//! vibrometry.
//!
//! Detected coincidences and anti-coincidences (or, in the classical
//! comparison, the singles at both beamsplitter outputs) are modelled as
//! inhomogeneous Poisson processes whose flux follows the interference fringe
//! evaluated at a vibrating delay. The crate is split into four layers:
//!
//! * [`fringe`]: physical constants, fringe models, delay/displacement units.
//! * [`simulate`]: ground-truth vibration signals and timestamp streams.
//! * [`estimate`]: spectral detection, refinement and waveform reconstruction.
//! * [`metrology`]: repeated trials, sweeps, loss/background comparisons and
//!   the quantum Cramér-Rao bound.

pub mod error;
pub mod estimate;
pub mod fringe;
pub mod metrology;
pub mod simulate;

pub use error::{Error, Result};
pub use estimate::{AnalysisOptions, ComponentEstimate, Inversion, ReconstructedSignal, SpectrumEstimate, Window};
pub use fringe::{ClassicalFringeSpec, GeometryFactor, PhotonPairSpec, SPEED_OF_LIGHT};
pub use metrology::{Mode, QcrbQuery, Scenario, TrialStatistics};
pub use simulate::{ChannelModel, GroundTruth, SignalKind, StreamTag, TimestampStream, VibrationSignal};
