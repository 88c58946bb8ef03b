//! Tagged timestamp streams and their on-disk formats.
//!
//! Text: a header line `qvibe-ts v1 <tag> <tick_ps> <t_exp_s> <count>`
//! followed by one decimal tick per line.
//!
//! Binary: a 32-byte little-endian header
//!
//! | offset | type   | field                 |
//! |--------|--------|-----------------------|
//! | 0      | [u8;4] | magic `QVTS`          |
//! | 4      | u16    | format version (1)    |
//! | 6      | u16    | tag code              |
//! | 8      | f64    | tick duration, ps     |
//! | 16     | f64    | exposure, s           |
//! | 24     | u64    | tick count            |
//!
//! followed by `count` little-endian `u64` ticks.

use std::fmt;
use std::io::{BufRead, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TEXT_MAGIC: &str = "qvibe-ts";
pub const BINARY_MAGIC: [u8; 4] = *b"QVTS";
pub const FORMAT_VERSION: u16 = 1;
pub const BINARY_HEADER_LEN: usize = 32;

/// Default timestamp resolution, ps.
pub const DEFAULT_TICK_PS: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreamTag {
    Coincidence,
    Anticoincidence,
    SinglesPort1,
    SinglesPort2,
}

impl StreamTag {
    pub fn as_str(self) -> &'static str {
        match self {
            StreamTag::Coincidence => "coincidence",
            StreamTag::Anticoincidence => "anticoincidence",
            StreamTag::SinglesPort1 => "singles_port1",
            StreamTag::SinglesPort2 => "singles_port2",
        }
    }

    fn code(self) -> u16 {
        match self {
            StreamTag::Coincidence => 0,
            StreamTag::Anticoincidence => 1,
            StreamTag::SinglesPort1 => 2,
            StreamTag::SinglesPort2 => 3,
        }
    }

    fn from_code(code: u16) -> Option<Self> {
        match code {
            0 => Some(StreamTag::Coincidence),
            1 => Some(StreamTag::Anticoincidence),
            2 => Some(StreamTag::SinglesPort1),
            3 => Some(StreamTag::SinglesPort2),
            _ => None,
        }
    }
}

impl fmt::Display for StreamTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StreamTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coincidence" => Ok(StreamTag::Coincidence),
            "anticoincidence" => Ok(StreamTag::Anticoincidence),
            "singles_port1" => Ok(StreamTag::SinglesPort1),
            "singles_port2" => Ok(StreamTag::SinglesPort2),
            other => Err(Error::invalid("tag", format!("unknown stream tag `{other}`"))),
        }
    }
}

/// Detection times of one channel, quantized to integer ticks.
///
/// Ticks are sorted but may repeat: two detections inside one tick are both
/// kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimestampStream {
    pub tag: StreamTag,
    ticks: Vec<u64>,
    tick_ps: f64,
    t_exp: f64,
}

impl TimestampStream {
    pub fn new(tag: StreamTag, ticks: Vec<u64>, tick_ps: f64, t_exp: f64) -> Result<Self> {
        if !(tick_ps.is_finite() && tick_ps > 0.0) {
            return Err(Error::invalid("tick_ps", format!("must be positive, got {tick_ps}")));
        }
        if !(t_exp.is_finite() && t_exp > 0.0) {
            return Err(Error::invalid("t_exp", format!("must be positive, got {t_exp}")));
        }
        if let Some(i) = ticks.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::invalid("ticks", format!("not sorted at index {}", i + 1)));
        }
        let stream = TimestampStream { tag, ticks, tick_ps, t_exp };
        if let Some(&last) = stream.ticks.last() {
            if last as f64 * stream.tick_duration() >= t_exp {
                return Err(Error::invalid("ticks", format!("tick {last} lies beyond the exposure")));
            }
        }
        Ok(stream)
    }

    pub fn empty(tag: StreamTag, tick_ps: f64, t_exp: f64) -> Result<Self> {
        Self::new(tag, Vec::new(), tick_ps, t_exp)
    }

    pub fn ticks(&self) -> &[u64] {
        &self.ticks
    }

    pub fn len(&self) -> usize {
        self.ticks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ticks.is_empty()
    }

    pub fn tick_ps(&self) -> f64 {
        self.tick_ps
    }

    /// Tick duration in seconds.
    pub fn tick_duration(&self) -> f64 {
        self.tick_ps * 1e-12
    }

    pub fn t_exp(&self) -> f64 {
        self.t_exp
    }

    /// Detection times in seconds from the start of the exposure.
    pub fn times(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        let dt = self.tick_duration();
        self.ticks.iter().map(move |&k| k as f64 * dt)
    }

    /// Detection times relative to the middle of the exposure.
    pub fn centered_times(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        let dt = self.tick_duration();
        let mid = self.t_exp / 2.0;
        self.ticks.iter().map(move |&k| k as f64 * dt - mid)
    }

    /// Merges two streams of the same tag and timing into one.
    pub fn merged(&self, other: &TimestampStream) -> Result<TimestampStream> {
        check_compatible(self, other)?;
        let mut ticks = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.ticks.len() && j < other.ticks.len() {
            if self.ticks[i] <= other.ticks[j] {
                ticks.push(self.ticks[i]);
                i += 1;
            } else {
                ticks.push(other.ticks[j]);
                j += 1;
            }
        }
        ticks.extend_from_slice(&self.ticks[i..]);
        ticks.extend_from_slice(&other.ticks[j..]);
        Ok(TimestampStream { tag: self.tag, ticks, tick_ps: self.tick_ps, t_exp: self.t_exp })
    }

    /// Copy with every tick moved by `delta` ticks; ticks leaving the
    /// exposure are dropped.
    pub fn shifted(&self, delta: i64) -> TimestampStream {
        let limit = (self.t_exp / self.tick_duration()).ceil() as i128;
        let ticks = self
            .ticks
            .iter()
            .map(|&k| k as i128 + delta as i128)
            .filter(|&k| k >= 0 && k < limit && (k as f64) * self.tick_duration() < self.t_exp)
            .map(|k| k as u64)
            .collect();
        TimestampStream { tag: self.tag, ticks, tick_ps: self.tick_ps, t_exp: self.t_exp }
    }

    pub fn write_text<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = BufWriter::new(writer);
        writeln!(
            w,
            "{TEXT_MAGIC} v{FORMAT_VERSION} {} {} {} {}",
            self.tag,
            self.tick_ps,
            self.t_exp,
            self.ticks.len()
        )?;
        for k in &self.ticks {
            writeln!(w, "{k}")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_text<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = match lines.next() {
            Some(line) => line?,
            None => return Err(Error::parse("line 1", "missing header")),
        };
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 6 || fields[0] != TEXT_MAGIC {
            return Err(Error::parse(
                "line 1",
                format!("expected `{TEXT_MAGIC} v1 <tag> <tick_ps> <t_exp_s> <count>`"),
            ));
        }
        if fields[1] != format!("v{FORMAT_VERSION}") {
            return Err(Error::parse("line 1", format!("unsupported version `{}`", fields[1])));
        }
        let tag: StreamTag = fields[2].parse().map_err(|e: Error| Error::parse("line 1", e.to_string()))?;
        let tick_ps: f64 = parse_field(fields[3], "tick_ps")?;
        let t_exp: f64 = parse_field(fields[4], "t_exp_s")?;
        let count: usize = parse_field(fields[5], "count")?;

        let mut ticks = Vec::with_capacity(count.min(1 << 26));
        for (idx, line) in lines.enumerate() {
            let line = line?;
            let lineno = idx + 2;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let tick: u64 = trimmed
                .parse()
                .map_err(|_| Error::parse(format!("line {lineno}"), format!("invalid tick `{trimmed}`")))?;
            if ticks.len() == count {
                return Err(Error::parse(format!("line {lineno}"), format!("more than the {count} ticks declared")));
            }
            ticks.push(tick);
        }
        if ticks.len() != count {
            return Err(Error::parse(
                format!("line {}", ticks.len() + 2),
                format!("truncated stream: {} of {count} ticks present", ticks.len()),
            ));
        }
        TimestampStream::new(tag, ticks, tick_ps, t_exp).map_err(|e| Error::parse("body", e.to_string()))
    }

    pub fn write_binary<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = BufWriter::new(writer);
        w.write_all(&BINARY_MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&self.tag.code().to_le_bytes())?;
        w.write_all(&self.tick_ps.to_le_bytes())?;
        w.write_all(&self.t_exp.to_le_bytes())?;
        w.write_all(&(self.ticks.len() as u64).to_le_bytes())?;
        for k in &self.ticks {
            w.write_all(&k.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut reader: R) -> Result<Self> {
        let mut header = [0u8; BINARY_HEADER_LEN];
        read_exact_at(&mut reader, &mut header, 0)?;
        if header[0..4] != BINARY_MAGIC {
            return Err(Error::parse("byte 0", "bad magic"));
        }
        let version = u16::from_le_bytes([header[4], header[5]]);
        if version != FORMAT_VERSION {
            return Err(Error::parse("byte 4", format!("unsupported version {version}")));
        }
        let code = u16::from_le_bytes([header[6], header[7]]);
        let tag =
            StreamTag::from_code(code).ok_or_else(|| Error::parse("byte 6", format!("unknown tag code {code}")))?;
        let tick_ps = f64::from_le_bytes(header[8..16].try_into().unwrap());
        let t_exp = f64::from_le_bytes(header[16..24].try_into().unwrap());
        let count = u64::from_le_bytes(header[24..32].try_into().unwrap()) as usize;

        let mut ticks = Vec::with_capacity(count.min(1 << 26));
        let mut buf = [0u8; 8];
        for i in 0..count {
            read_exact_at(&mut reader, &mut buf, BINARY_HEADER_LEN + 8 * i)?;
            ticks.push(u64::from_le_bytes(buf));
        }
        let mut extra = [0u8; 1];
        if reader.read(&mut extra)? != 0 {
            return Err(Error::parse(
                format!("byte {}", BINARY_HEADER_LEN + 8 * count),
                "trailing bytes after declared ticks",
            ));
        }
        TimestampStream::new(tag, ticks, tick_ps, t_exp).map_err(|e| Error::parse("body", e.to_string()))
    }

    pub fn save_text(&self, path: &Path) -> Result<()> {
        self.write_text(std::fs::File::create(path)?)
    }

    pub fn save_binary(&self, path: &Path) -> Result<()> {
        self.write_binary(std::fs::File::create(path)?)
    }

    /// Loads either format, detected from the leading bytes.
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        if bytes.starts_with(&BINARY_MAGIC) {
            Self::read_binary(bytes.as_slice())
        } else {
            Self::read_text(bytes.as_slice())
        }
    }
}

fn parse_field<T: FromStr>(s: &str, name: &str) -> Result<T> {
    s.parse().map_err(|_| Error::parse("line 1", format!("invalid {name} `{s}`")))
}

fn read_exact_at<R: Read>(reader: &mut R, buf: &mut [u8], offset: usize) -> Result<()> {
    reader.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::parse(format!("byte {offset}"), "unexpected end of file"),
        _ => Error::Io(e),
    })
}

/// Fails unless both streams share tick duration and exposure.
pub fn check_compatible(a: &TimestampStream, b: &TimestampStream) -> Result<()> {
    if a.t_exp != b.t_exp {
        return Err(Error::StreamMismatch { what: "exposure (s)", left: a.t_exp, right: b.t_exp });
    }
    if a.tick_ps != b.tick_ps {
        return Err(Error::StreamMismatch { what: "tick duration (ps)", left: a.tick_ps, right: b.tick_ps });
    }
    Ok(())
}
