//! Scenario configuration.
//!
//! The line format is `key = value` under `[section]` headers; `#` starts a
//! comment. A JSON document with the same sections and keys is accepted too,
//! with an array standing for a repeated key. Physical quantities carry an
//! explicit unit suffix; unknown sections or keys are errors.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use qvibe_core::estimate::AnalysisOptions;
use qvibe_core::metrology::{Condition, Mode};
use qvibe_core::simulate::{SinusoidComponent, DEFAULT_TICK_PS};
use qvibe_core::{ChannelModel, ClassicalFringeSpec, GeometryFactor, PhotonPairSpec, VibrationSignal, Window};
use serde_json::Value;

use crate::error::{CliError, CliResult};

const SECTIONS: &[&str] =
    &["run", "pair", "classical", "channel", "signal", "analysis", "trials", "sweep", "advantage", "qcrb"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    Length,
    Frequency,
    Time,
}

/// Decimal exponent of each accepted suffix.
fn unit_exponent(unit: Unit, suffix: &str) -> Option<i32> {
    match (unit, suffix) {
        (Unit::Length, "nm") => Some(-9),
        (Unit::Frequency, "Hz") => Some(0),
        (Unit::Frequency, "kHz") => Some(3),
        (Unit::Frequency, "MHz") => Some(6),
        (Unit::Frequency, "THz") => Some(12),
        (Unit::Time, "s") => Some(0),
        (Unit::Time, "ms") => Some(-3),
        (Unit::Time, "ps") => Some(-12),
        _ => None,
    }
}

/// Parses `"<number> <unit>"` (the space is optional) into SI units.
pub fn parse_quantity(text: &str, unit: Unit) -> Result<f64, String> {
    let text = text.trim();
    let split = text
        .find(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E')
        .ok_or_else(|| format!("`{text}` is missing a unit suffix"))?;
    let (num, suffix) = text.split_at(split);
    let exp = unit_exponent(unit, suffix.trim()).ok_or_else(|| format!("`{suffix}` is not a valid {unit:?} unit"))?;
    let value: f64 = num.trim().parse().map_err(|_| format!("`{}` is not a number", num.trim()))?;
    if !value.is_finite() {
        return Err(format!("`{text}` is not finite"));
    }
    // Dividing by an exact power of ten keeps "30 nm" equal to 30e-9.
    Ok(if exp < 0 { value / 10f64.powi(-exp) } else { value * 10f64.powi(exp) })
}

#[derive(Debug, Clone)]
struct Entry {
    section: String,
    key: String,
    value: String,
    location: String,
}

/// Untyped entries in file order, with a record of which were read.
#[derive(Debug)]
pub struct RawConfig {
    entries: Vec<Entry>,
    used: std::cell::RefCell<Vec<bool>>,
}

impl RawConfig {
    fn new(entries: Vec<Entry>) -> CliResult<Self> {
        for e in &entries {
            if !SECTIONS.contains(&e.section.as_str()) {
                return Err(CliError::config(format!("{}: unknown section `{}`", e.location, e.section)));
            }
        }
        let used = std::cell::RefCell::new(vec![false; entries.len()]);
        Ok(RawConfig { entries, used })
    }

    pub fn parse_ini(text: &str) -> CliResult<Self> {
        let mut entries = Vec::new();
        let mut section: Option<String> = None;
        for (i, line) in text.lines().enumerate() {
            let location = format!("line {}", i + 1);
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| CliError::config(format!("{location}: unterminated section header")))?;
                section = Some(name.trim().to_string());
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| CliError::config(format!("{location}: expected `key = value`")))?;
            let section =
                section.clone().ok_or_else(|| CliError::config(format!("{location}: key outside of any section")))?;
            entries.push(Entry { section, key: key.trim().to_string(), value: value.trim().to_string(), location });
        }
        RawConfig::new(entries)
    }

    pub fn parse_json(text: &str) -> CliResult<Self> {
        let doc: Value = serde_json::from_str(text).map_err(|e| CliError::config(format!("json: {e}")))?;
        let top = doc.as_object().ok_or_else(|| CliError::config("json: top level must be an object"))?;
        let mut entries = Vec::new();
        for (section, body) in top {
            let body = body
                .as_object()
                .ok_or_else(|| CliError::config(format!("json: section `{section}` must be an object")))?;
            for (key, value) in body {
                let location = format!("json {section}.{key}");
                let values = match value {
                    Value::Array(items) => items.clone(),
                    other => vec![other.clone()],
                };
                for v in values {
                    let value = match v {
                        Value::String(s) => s,
                        Value::Number(n) => n.to_string(),
                        Value::Bool(b) => b.to_string(),
                        _ => return Err(CliError::config(format!("{location}: expected a string, number or bool"))),
                    };
                    entries.push(Entry {
                        section: section.clone(),
                        key: key.clone(),
                        value,
                        location: location.clone(),
                    });
                }
            }
        }
        RawConfig::new(entries)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let parsed =
            if text.trim_start().starts_with('{') { RawConfig::parse_json(&text) } else { RawConfig::parse_ini(&text) };
        parsed.map_err(|e| e.context(path.display()))
    }

    fn all(&self, section: &str, key: &str) -> Vec<&Entry> {
        let mut used = self.used.borrow_mut();
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.section == section && e.key == key)
            .map(|(i, e)| {
                used[i] = true;
                e
            })
            .collect()
    }

    fn one(&self, section: &str, key: &str) -> CliResult<Option<&Entry>> {
        let found = self.all(section, key);
        match found.as_slice() {
            [] => Ok(None),
            [e] => Ok(Some(*e)),
            [_, second, ..] => Err(CliError::config(format!("{}: `{key}` given more than once", second.location))),
        }
    }

    fn has_section(&self, section: &str) -> bool {
        self.entries.iter().any(|e| e.section == section)
    }

    fn get<T>(&self, section: &str, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> CliResult<Option<T>> {
        match self.one(section, key)? {
            None => Ok(None),
            Some(e) => {
                parse(&e.value).map(Some).map_err(|m| CliError::config(format!("{}: {section}.{key}: {m}", e.location)))
            }
        }
    }

    fn quantity(&self, section: &str, key: &str, unit: Unit) -> CliResult<Option<f64>> {
        self.get(section, key, |v| parse_quantity(v, unit))
    }

    fn number<T: FromStr>(&self, section: &str, key: &str) -> CliResult<Option<T>> {
        self.get(section, key, |v| v.parse::<T>().map_err(|_| format!("`{v}` is not a valid value")))
    }

    fn require<T>(value: Option<T>, section: &str, key: &str) -> CliResult<T> {
        value.ok_or_else(|| CliError::config(format!("missing `{key}` in [{section}]")))
    }

    /// Fails on any entry nothing asked for.
    fn check_all_used(&self) -> CliResult<()> {
        let used = self.used.borrow();
        match self.entries.iter().zip(used.iter()).find(|(_, &u)| !u) {
            Some((e, _)) => {
                Err(CliError::config(format!("{}: unknown key `{}` in [{}]", e.location, e.key, e.section)))
            }
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StreamFormat {
    Text,
    #[default]
    Binary,
}

impl StreamFormat {
    pub fn extension(self) -> &'static str {
        match self {
            StreamFormat::Text => "txt",
            StreamFormat::Binary => "qvts",
        }
    }
}

impl FromStr for StreamFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "text" => Ok(StreamFormat::Text),
            "binary" => Ok(StreamFormat::Binary),
            _ => Err(format!("expected text or binary, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialsConfig {
    pub frequency: f64,
    pub amplitudes: Vec<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub frequencies: Vec<f64>,
    pub amplitude: f64,
    pub exposure: f64,
    pub playback_scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdvantageConfig {
    pub schedule: Vec<Condition>,
    pub quantum_exposure: f64,
    pub classical_exposure: f64,
    pub classical_singles: f64,
    pub equalize: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QcrbConfig {
    pub pairs: u64,
    /// Monte-Carlo trials; zero skips the simulation.
    pub trials: usize,
}

/// Fully typed and validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub mode: Mode,
    pub seed: u64,
    pub t_exp: f64,
    pub tick_ps: f64,
    pub stream_format: StreamFormat,
    pub out: Option<PathBuf>,
    pub pair: PhotonPairSpec,
    pub fringe: ClassicalFringeSpec,
    pub channel: ChannelModel,
    pub signal: VibrationSignal,
    pub analysis: AnalysisOptions,
    pub trials: Option<TrialsConfig>,
    pub sweep: Option<SweepConfig>,
    pub advantage: Option<AdvantageConfig>,
    pub qcrb: Option<QcrbConfig>,
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" | "yes" | "on" => Ok(true),
        "false" | "no" | "off" => Ok(false),
        _ => Err(format!("expected true or false, got `{v}`")),
    }
}

fn parse_list(v: &str, unit: Unit) -> Result<Vec<f64>, String> {
    v.split(',').map(|item| parse_quantity(item, unit)).collect()
}

/// `frequency, pp, phase` as in `25 Hz, 30 nm, 0.1`.
fn parse_tone(v: &str) -> Result<SinusoidComponent, String> {
    let parts: Vec<&str> = v.split(',').collect();
    let [f, pp, phase] = parts.as_slice() else {
        return Err(format!("expected `frequency, amplitude, phase`, got `{v}`"));
    };
    Ok(SinusoidComponent {
        frequency: parse_quantity(f, Unit::Frequency)?,
        amplitude_pp: parse_quantity(pp, Unit::Length)?,
        phase: phase.trim().parse().map_err(|_| format!("`{}` is not a phase in rad", phase.trim()))?,
    })
}

/// `loss, background` fractions.
fn parse_condition(v: &str) -> Result<Condition, String> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    let [l, b] = parts.as_slice() else {
        return Err(format!("expected `loss, background`, got `{v}`"));
    };
    let num = |s: &str| s.parse::<f64>().map_err(|_| format!("`{s}` is not a number"));
    Ok(Condition { loss_b: num(l)?, background_fraction: num(b)? })
}

fn parse_geometry(v: &str) -> Result<GeometryFactor, String> {
    match v {
        "1" => Ok(GeometryFactor::Single),
        "2" => Ok(GeometryFactor::RetroReflected),
        _ => Err(format!("geometry must be 1 or 2, got `{v}`")),
    }
}

fn parse_frequency_range(raw: &RawConfig) -> CliResult<Vec<f64>> {
    let start = RawConfig::require(raw.quantity("sweep", "start", Unit::Frequency)?, "sweep", "start")?;
    let stop = RawConfig::require(raw.quantity("sweep", "stop", Unit::Frequency)?, "sweep", "stop")?;
    let step = RawConfig::require(raw.quantity("sweep", "step", Unit::Frequency)?, "sweep", "step")?;
    if !(step > 0.0 && stop >= start) {
        return Err(CliError::config("[sweep] needs step > 0 and stop >= start"));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|k| start + k as f64 * step).collect())
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        ScenarioConfig::from_raw(&RawConfig::load(path)?).map_err(|e| e.context(path.display()))
    }

    pub fn from_raw(raw: &RawConfig) -> CliResult<Self> {
        let mode = raw.get("run", "mode", |v| Mode::from_str(v).map_err(|e| e.to_string()))?.unwrap_or_default();
        let seed = raw.number("run", "seed")?.unwrap_or(1);
        let t_exp = raw.quantity("run", "exposure", Unit::Time)?.unwrap_or(1.0);
        let tick_ps = raw.quantity("run", "tick", Unit::Time)?.map(|t| t * 1e12).unwrap_or(DEFAULT_TICK_PS);
        let stream_format = raw.get("run", "stream_format", StreamFormat::from_str)?.unwrap_or_default();
        let out = raw.get("run", "out", |v| Ok(PathBuf::from(v)))?;
        if !(t_exp > 0.0) {
            return Err(CliError::config(format!("run.exposure must be positive, got {t_exp} s")));
        }
        if !(tick_ps > 0.0) {
            return Err(CliError::config("run.tick must be positive"));
        }

        let defaults = PhotonPairSpec::default();
        let detuning = raw.quantity("pair", "detuning", Unit::Frequency)?;
        let bandwidth = raw.quantity("pair", "bandwidth", Unit::Frequency)?;
        let visibility = raw.number("pair", "visibility")?.unwrap_or(defaults.visibility_v0);
        let mut pair = PhotonPairSpec::new(
            detuning.map(|f| std::f64::consts::TAU * f).unwrap_or(defaults.delta_omega),
            bandwidth.map(|f| std::f64::consts::TAU * f).unwrap_or(defaults.sigma),
            visibility,
        )?;
        if let Some(w) = raw.get("pair", "wavelengths", |v| parse_list(v, Unit::Length))? {
            let [l1, l2] = w.as_slice() else {
                return Err(CliError::config("pair.wavelengths takes two values"));
            };
            pair = pair.with_wavelengths(*l1, *l2)?;
        }
        let tau_op = pair.quadrature_delay();

        let wavelength = raw.quantity("classical", "wavelength", Unit::Length)?.unwrap_or(1550e-9);
        let arm_ratio = raw.number("classical", "arm_ratio")?.unwrap_or(1.0);
        let fringe = ClassicalFringeSpec::at_quadrature(wavelength, arm_ratio, tau_op)?;

        let d = ChannelModel::default();
        let channel = ChannelModel {
            loss_b: raw.number("channel", "loss")?.unwrap_or(d.loss_b),
            background_fraction: raw.number("channel", "background")?.unwrap_or(d.background_fraction),
            coincidence_window: raw
                .quantity("channel", "coincidence_window", Unit::Time)?
                .unwrap_or(d.coincidence_window),
            rate_c: raw.quantity("channel", "rate_c", Unit::Frequency)?.unwrap_or(d.rate_c),
            rate_a: raw.quantity("channel", "rate_a", Unit::Frequency)?.unwrap_or(d.rate_a),
            singles_rate: raw.quantity("channel", "singles", Unit::Frequency)?.unwrap_or(d.singles_rate),
            geometry: raw.get("channel", "geometry", parse_geometry)?.unwrap_or(d.geometry),
        };
        channel.validate()?;

        let signal = ScenarioConfig::signal(raw, tau_op)?;

        let da = AnalysisOptions::default();
        let analysis = AnalysisOptions {
            p_fa: raw.number("analysis", "p_fa")?.unwrap_or(da.p_fa),
            f_max: raw.quantity("analysis", "f_max", Unit::Frequency)?.unwrap_or(da.f_max),
            window: raw
                .get("analysis", "window", |v| Window::from_str(v).map_err(|e| e.to_string()))?
                .unwrap_or(da.window),
            ratio: raw.number("analysis", "ratio")?.unwrap_or(da.ratio),
            max_trace_samples: raw.number("analysis", "trace_samples")?.unwrap_or(da.max_trace_samples),
        };

        let trials = if raw.has_section("trials") {
            let amplitudes = raw.get("trials", "amplitudes", |v| parse_list(v, Unit::Length))?;
            Some(TrialsConfig {
                frequency: RawConfig::require(
                    raw.quantity("trials", "frequency", Unit::Frequency)?,
                    "trials",
                    "frequency",
                )?,
                amplitudes: RawConfig::require(amplitudes, "trials", "amplitudes")?,
                count: raw.number("trials", "count")?.unwrap_or(10),
            })
        } else {
            None
        };

        let sweep = if raw.has_section("sweep") {
            Some(SweepConfig {
                frequencies: parse_frequency_range(raw)?,
                amplitude: RawConfig::require(raw.quantity("sweep", "amplitude", Unit::Length)?, "sweep", "amplitude")?,
                exposure: raw.quantity("sweep", "exposure", Unit::Time)?.unwrap_or(t_exp),
                playback_scale: raw.number("sweep", "playback_scale")?.unwrap_or(1.0),
            })
        } else {
            None
        };

        let advantage = if raw.has_section("advantage") {
            let schedule = raw
                .all("advantage", "condition")
                .into_iter()
                .map(|e| parse_condition(&e.value).map_err(|m| CliError::config(format!("{}: {m}", e.location))))
                .collect::<CliResult<Vec<_>>>()?;
            Some(AdvantageConfig {
                schedule,
                quantum_exposure: raw.quantity("advantage", "quantum_exposure", Unit::Time)?.unwrap_or(3.0),
                classical_exposure: raw.quantity("advantage", "classical_exposure", Unit::Time)?.unwrap_or(1.0),
                classical_singles: raw.quantity("advantage", "classical_singles", Unit::Frequency)?.unwrap_or(1.2e6),
                equalize: raw.get("advantage", "equalize", parse_bool)?.unwrap_or(true),
            })
        } else {
            None
        };

        let qcrb = if raw.has_section("qcrb") {
            Some(QcrbConfig {
                pairs: RawConfig::require(raw.number("qcrb", "pairs")?, "qcrb", "pairs")?,
                trials: raw.number("qcrb", "trials")?.unwrap_or(0),
            })
        } else {
            None
        };

        raw.check_all_used()?;
        Ok(ScenarioConfig {
            mode,
            seed,
            t_exp,
            tick_ps,
            stream_format,
            out,
            pair,
            fringe,
            channel,
            signal,
            analysis,
            trials,
            sweep,
            advantage,
            qcrb,
        })
    }

    fn signal(raw: &RawConfig, tau_op: f64) -> CliResult<VibrationSignal> {
        let kind = raw.get("signal", "type", |v| Ok(v.to_string()))?.unwrap_or_else(|| "silent".into());
        let freq = |key| raw.quantity("signal", key, Unit::Frequency);
        let len = |key| raw.quantity("signal", key, Unit::Length);
        let req = |v: Option<f64>, key| RawConfig::require(v, "signal", key);
        let signal = match kind.as_str() {
            "silent" => VibrationSignal::silent(tau_op),
            "tone" => {
                let phase = raw.number("signal", "phase")?.unwrap_or(0.0);
                VibrationSignal::pure_tone(
                    req(freq("frequency")?, "frequency")?,
                    req(len("amplitude")?, "amplitude")?,
                    phase,
                    tau_op,
                )?
            }
            "tones" => {
                let tones = raw
                    .all("signal", "tone")
                    .into_iter()
                    .map(|e| parse_tone(&e.value).map_err(|m| CliError::config(format!("{}: {m}", e.location))))
                    .collect::<CliResult<Vec<_>>>()?;
                if tones.is_empty() {
                    return Err(CliError::config("signal type `tones` needs at least one `tone` entry"));
                }
                VibrationSignal::multi_tone(tones, tau_op)?
            }
            "square" => {
                let harmonics = raw.number("signal", "harmonics")?.unwrap_or(7);
                VibrationSignal::square_wave(
                    req(freq("fundamental")?, "fundamental")?,
                    req(len("amplitude")?, "amplitude")?,
                    harmonics,
                    tau_op,
                )?
            }
            "alternating" => {
                let harmonics = raw.number("signal", "harmonics")?.unwrap_or(40);
                VibrationSignal::amplitude_modulated(
                    req(freq("switch_rate")?, "switch_rate")?,
                    (req(freq("low_frequency")?, "low_frequency")?, req(len("low_amplitude")?, "low_amplitude")?),
                    (req(freq("high_frequency")?, "high_frequency")?, req(len("high_amplitude")?, "high_amplitude")?),
                    harmonics,
                    tau_op,
                )?
            }
            other => {
                return Err(CliError::config(format!(
                    "unknown signal type `{other}` (silent, tone, tones, square, alternating)"
                )))
            }
        };
        Ok(signal)
    }
}
