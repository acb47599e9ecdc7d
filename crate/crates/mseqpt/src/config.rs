//! Experiment configuration.
//!
//! Configs are flat `key = value` text files with `#` comments; CLI flags
//! override file keys one for one. A config names exactly one channel
//! (named gate, explicit unitary entries, or an explicit Kraus list), the
//! protocol, the element selection, and the backend parameters.

use std::fmt;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::channel::{
    amplitude_damping, depolarizing, make_gate, phase_damping, GateSpec, QuantumChannel,
};
use crate::error::{Error, Result};

/// Estimation protocol to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    Mseqpt,
    Qpt,
    Seqpt,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Mseqpt => "mseqpt",
            Protocol::Qpt => "qpt",
            Protocol::Seqpt => "seqpt",
        }
    }
}

impl std::str::FromStr for Protocol {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mseqpt" => Ok(Protocol::Mseqpt),
            "qpt" => Ok(Protocol::Qpt),
            "seqpt" => Ok(Protocol::Seqpt),
            other => Err(Error::Config(format!("unknown protocol '{other}'"))),
        }
    }
}

/// Which χ elements to estimate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selection {
    Full,
    Elements(Vec<(usize, usize)>),
}

impl Selection {
    /// Parses `full` or `a,b;a,b` pair lists.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "full" {
            return Ok(Selection::Full);
        }
        let mut pairs = Vec::new();
        for chunk in s.split(';') {
            let chunk = chunk.trim();
            if chunk.is_empty() {
                continue;
            }
            let parts: Vec<&str> = chunk.split(',').map(str::trim).collect();
            if parts.len() != 2 {
                return Err(Error::Config(format!(
                    "element '{chunk}' is not an a,b pair"
                )));
            }
            let a = parts[0]
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("bad element index '{}'", parts[0])))?;
            let b = parts[1]
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("bad element index '{}'", parts[1])))?;
            pairs.push((a, b));
        }
        if pairs.is_empty() {
            return Err(Error::Config("empty element selection".into()));
        }
        Ok(Selection::Elements(pairs))
    }
}

impl fmt::Display for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Selection::Full => write!(f, "full"),
            Selection::Elements(pairs) => {
                let parts: Vec<String> =
                    pairs.iter().map(|(a, b)| format!("{a},{b}")).collect();
                write!(f, "{}", parts.join(";"))
            }
        }
    }
}

/// Channel description: a named gate or explicit matrix entries.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelSpec {
    Named(String),
    Unitary(Vec<Complex64>),
    Kraus(Vec<Vec<Complex64>>),
}

impl ChannelSpec {
    /// Builds the channel, resolving named gates and noise constructions.
    pub fn build(&self) -> Result<QuantumChannel> {
        match self {
            ChannelSpec::Named(name) => build_named_channel(name),
            ChannelSpec::Unitary(entries) => {
                let u = entries_to_matrix(entries)?;
                QuantumChannel::unitary(u)
            }
            ChannelSpec::Kraus(ops) => {
                let mats = ops
                    .iter()
                    .map(|entries| entries_to_matrix(entries))
                    .collect::<Result<Vec<_>>>()?;
                QuantumChannel::kraus(mats)
            }
        }
    }

    /// Short name used in reports and file metadata.
    pub fn describe(&self) -> String {
        match self {
            ChannelSpec::Named(name) => name.clone(),
            ChannelSpec::Unitary(entries) => format!("unitary({} entries)", entries.len()),
            ChannelSpec::Kraus(ops) => format!("kraus({} operators)", ops.len()),
        }
    }
}

fn build_named_channel(name: &str) -> Result<QuantumChannel> {
    let mut parts = name.split(':');
    let head = parts.next().unwrap_or_default();
    let params: Vec<&str> = parts.collect();
    let parse_f64 = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| Error::Config(format!("bad channel parameter '{s}'")))
    };
    let parse_qubit = |s: Option<&&str>| -> Result<usize> {
        match s {
            None => Ok(1),
            Some(v) => v
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("bad qubit index '{v}'"))),
        }
    };
    match head {
        "noop" => Ok(make_gate(GateSpec::Noop)),
        "cnot" => Ok(make_gate(GateSpec::Cnot)),
        "ch" => Ok(make_gate(GateSpec::Ch)),
        "cnot-textbook" => Ok(make_gate(GateSpec::TextbookCnot)),
        "ch-textbook" => Ok(make_gate(GateSpec::TextbookCh)),
        "depolarizing" => {
            let p = parse_f64(params.first().ok_or_else(|| {
                Error::Config("depolarizing:<p> needs a probability".into())
            })?)?;
            depolarizing(2, p)
        }
        "phase-damping" => {
            let p = parse_f64(params.first().ok_or_else(|| {
                Error::Config("phase-damping:<p>[:qubit] needs a probability".into())
            })?)?;
            let qubit = parse_qubit(params.get(1))?;
            phase_damping(2, qubit, p)
        }
        "amplitude-damping" => {
            let g = parse_f64(params.first().ok_or_else(|| {
                Error::Config("amplitude-damping:<gamma>[:qubit] needs a rate".into())
            })?)?;
            let qubit = parse_qubit(params.get(1))?;
            amplitude_damping(2, qubit, g)
        }
        other => Err(Error::Config(format!("unknown channel '{other}'"))),
    }
}

fn entries_to_matrix(entries: &[Complex64]) -> Result<crate::linalg::CMatrix> {
    let dim = (entries.len() as f64).sqrt().round() as usize;
    if dim * dim != entries.len() || dim == 0 {
        return Err(Error::Config(format!(
            "{} entries do not form a square matrix",
            entries.len()
        )));
    }
    Ok(crate::linalg::CMatrix::from_shape_fn((dim, dim), |(r, s)| {
        entries[r * dim + s]
    }))
}

/// Parses complex literals of the forms `1.5`, `-2`, `i`, `-i`, `0.5i`,
/// `1+2i`, `-1.5-0.5i`.
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Config("empty complex literal".into()));
    }
    let bad = || Error::Config(format!("bad complex literal '{s}'"));
    if let Some(im_part) = s.strip_suffix('i') {
        // Split the imaginary suffix from an optional leading real part by
        // the last +/- that is not an exponent sign or leading sign.
        let bytes = im_part.as_bytes();
        let mut split = None;
        for idx in (1..bytes.len()).rev() {
            let ch = bytes[idx] as char;
            if (ch == '+' || ch == '-') && !matches!(bytes[idx - 1] as char, 'e' | 'E') {
                split = Some(idx);
                break;
            }
        }
        let (re_str, im_str) = match split {
            Some(idx) => (&im_part[..idx], &im_part[idx..]),
            None => ("", im_part),
        };
        let re = if re_str.is_empty() {
            0.0
        } else {
            re_str.parse::<f64>().map_err(|_| bad())?
        };
        let im = match im_str {
            "" | "+" => 1.0,
            "-" => -1.0,
            other => other.parse::<f64>().map_err(|_| bad())?,
        };
        Ok(Complex64::new(re, im))
    } else {
        let re = s.parse::<f64>().map_err(|_| bad())?;
        Ok(Complex64::new(re, 0.0))
    }
}

fn parse_entries(s: &str) -> Result<Vec<Complex64>> {
    s.split_whitespace().map(parse_complex).collect()
}

/// Backend noise selector; parameters live in separate keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    Ideal,
    Shots,
    Gaussian,
}

impl BackendKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BackendKind::Ideal => "ideal",
            BackendKind::Shots => "shots",
            BackendKind::Gaussian => "gaussian",
        }
    }
}

/// Report serialization target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
    Both,
}

impl OutputFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            OutputFormat::Json => "json",
            OutputFormat::Csv => "csv",
            OutputFormat::Both => "both",
        }
    }

    pub fn wants_json(self) -> bool {
        matches!(self, OutputFormat::Json | OutputFormat::Both)
    }

    pub fn wants_csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }
}

/// A fully resolved experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub channel: ChannelSpec,
    pub protocol: Protocol,
    pub selection: Selection,
    pub backend: BackendKind,
    pub shots: u64,
    pub sigma: f64,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub format: OutputFormat,
    pub export_cache: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            channel: ChannelSpec::Named("noop".into()),
            protocol: Protocol::Mseqpt,
            selection: Selection::Full,
            backend: BackendKind::Ideal,
            shots: 10_000,
            sigma: 0.01,
            seed: 0,
            out_dir: PathBuf::from("."),
            format: OutputFormat::Both,
            export_cache: false,
        }
    }
}

impl ExperimentConfig {
    /// Loads a flat key-value file, reporting the offending line on errors.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut config = Self::default();
        let mut channel_keys = 0;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            let key = key.trim();
            if matches!(key, "channel" | "unitary" | "kraus") {
                channel_keys += 1;
            }
            config
                .apply_key(key, value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        if channel_keys > 1 {
            return Err(Error::Config(
                "exactly one of channel/unitary/kraus may be given".into(),
            ));
        }
        Ok(config)
    }

    /// Applies one key-value assignment (file line or flag override).
    pub fn apply_key(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "channel" => self.channel = ChannelSpec::Named(value.to_string()),
            "unitary" => self.channel = ChannelSpec::Unitary(parse_entries(value)?),
            "kraus" => {
                let ops = value
                    .split(';')
                    .map(parse_entries)
                    .collect::<Result<Vec<_>>>()?;
                self.channel = ChannelSpec::Kraus(ops);
            }
            "protocol" => self.protocol = value.parse()?,
            "elements" => self.selection = Selection::parse(value)?,
            "backend" => {
                self.backend = match value {
                    "ideal" => BackendKind::Ideal,
                    "shots" => BackendKind::Shots,
                    "gaussian" => BackendKind::Gaussian,
                    other => {
                        return Err(Error::Config(format!("unknown backend '{other}'")))
                    }
                }
            }
            "shots" => {
                self.shots = value
                    .parse()
                    .map_err(|_| Error::Config(format!("bad shot count '{value}'")))?;
                if self.shots == 0 {
                    return Err(Error::Config("shot count must be positive".into()));
                }
            }
            "sigma" => {
                self.sigma = value
                    .parse()
                    .map_err(|_| Error::Config(format!("bad sigma '{value}'")))?;
                if self.sigma < 0.0 {
                    return Err(Error::Config("sigma must be nonnegative".into()));
                }
            }
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| Error::Config(format!("bad seed '{value}'")))?
            }
            "out_dir" | "out-dir" => self.out_dir = PathBuf::from(value),
            "format" => {
                self.format = match value {
                    "json" => OutputFormat::Json,
                    "csv" => OutputFormat::Csv,
                    "both" => OutputFormat::Both,
                    other => return Err(Error::Config(format!("unknown format '{other}'"))),
                }
            }
            "export_cache" | "export-cache" => {
                self.export_cache = value
                    .parse()
                    .map_err(|_| Error::Config(format!("bad boolean '{value}'")))?
            }
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// The backend noise mode this config selects.
    pub fn backend_mode(&self) -> crate::backend::BackendMode {
        match self.backend {
            BackendKind::Ideal => crate::backend::BackendMode::Ideal,
            BackendKind::Shots => crate::backend::BackendMode::Shots {
                n: self.shots,
                seed: self.seed,
            },
            BackendKind::Gaussian => crate::backend::BackendMode::GaussianNoise {
                sigma: self.sigma,
                seed: self.seed,
            },
        }
    }

    /// Canonical one-line-per-key form: the hash input and the config echo
    /// stored in reports.
    pub fn canonical_string(&self) -> String {
        let channel = match &self.channel {
            ChannelSpec::Named(name) => format!("channel = {name}"),
            ChannelSpec::Unitary(entries) => format!(
                "unitary = {}",
                entries
                    .iter()
                    .map(|z| format!("{}{}{}i", z.re, if z.im < 0.0 { "" } else { "+" }, z.im))
                    .collect::<Vec<_>>()
                    .join(" ")
            ),
            ChannelSpec::Kraus(ops) => format!(
                "kraus = {}",
                ops.iter()
                    .map(|entries| entries
                        .iter()
                        .map(|z| format!("{}{}{}i", z.re, if z.im < 0.0 { "" } else { "+" }, z.im))
                        .collect::<Vec<_>>()
                        .join(" "))
                    .collect::<Vec<_>>()
                    .join(" ; ")
            ),
        };
        format!(
            "{channel}\nprotocol = {}\nelements = {}\nbackend = {}\nshots = {}\nsigma = {}\nseed = {}\nformat = {}\n",
            self.protocol.as_str(),
            self.selection,
            self.backend.as_str(),
            self.shots,
            self.sigma,
            self.seed,
            self.format.as_str(),
        )
    }

    /// FNV-1a hash of the canonical form, as fixed-width hex.
    pub fn hash(&self) -> String {
        let mut h: u64 = 0xcbf29ce484222325;
        for byte in self.canonical_string().bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }
}
