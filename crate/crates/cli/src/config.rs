//! Experiment configuration: a TOML file with top-level model parameters and
//! one section per experiment. Every key has a default; unknown keys are
//! rejected before anything runs.

use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use shearless_core::classical::{RotationScan, MIN_ROTATION_ITERATIONS};
use shearless_core::entanglement::{lookup_estimator, DEFAULT_ESTIMATOR, DEFAULT_PAIRS, DEFAULT_SAMPLES_PER_PERIOD};
use shearless_core::floquet::{DEFAULT_GRID_POINTS, DEFAULT_PROMINENCE, DEFAULT_SIGMA, WEIGHT_THRESHOLD};
use shearless_core::params::{
    DEFAULT_CLASSICAL_SUBSTEPS, DEFAULT_COUPLING, DEFAULT_FIELD, DEFAULT_OMEGA, DEFAULT_PACKET_WIDTH,
    DEFAULT_QUANTUM_SUBSTEPS, DEFAULT_SITES,
};
use shearless_core::scheme::DEFAULT_SCHEME;
use shearless_core::{Drive, PacketSpec, SimParams, ValidatedParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("syntax error at line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown key `{key}` at line {line}")]
    UnknownKey { key: String, line: usize },
    #[error("invalid value for `{key}`{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    InvalidValue {
        key: String,
        line: Option<usize>,
        message: String,
    },
    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },
}

impl ConfigError {
    pub fn key(&self) -> Option<&str> {
        match self {
            Self::UnknownKey { key, .. } | Self::InvalidValue { key, .. } => Some(key),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    #[serde(rename = "J")]
    pub coupling: f64,
    #[serde(rename = "B0")]
    pub field: f64,
    #[serde(rename = "N")]
    pub sites: usize,
    pub omega: f64,
    pub drive: String,
    pub quantum_substeps: usize,
    pub classical_substeps: usize,
    pub scheme: String,
    /// Impulse strength of the kicked drive; B0 T when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kick_strength: Option<f64>,
    pub output_dir: PathBuf,
    pub packet: PacketConfig,
    pub sos: SosConfig,
    pub evolve: EvolveConfig,
    pub rotation: RotationConfig,
    pub floquet: FloquetConfig,
    pub concurrence: ConcurrenceConfig,
    pub ensemble: EnsembleConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            coupling: DEFAULT_COUPLING,
            field: DEFAULT_FIELD,
            sites: DEFAULT_SITES,
            omega: DEFAULT_OMEGA,
            drive: Drive::default().to_string(),
            quantum_substeps: DEFAULT_QUANTUM_SUBSTEPS,
            classical_substeps: DEFAULT_CLASSICAL_SUBSTEPS,
            scheme: DEFAULT_SCHEME.to_string(),
            kick_strength: None,
            output_dir: PathBuf::from("out"),
            packet: PacketConfig::default(),
            sos: SosConfig::default(),
            evolve: EvolveConfig::default(),
            rotation: RotationConfig::default(),
            floquet: FloquetConfig::default(),
            concurrence: ConcurrenceConfig::default(),
            ensemble: EnsembleConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PacketConfig {
    pub j0: usize,
    pub k0: f64,
    pub delta_j: f64,
    /// Round k0 to the nearest lattice momentum 2 pi m / N.
    pub snap_momentum: bool,
}

impl Default for PacketConfig {
    fn default() -> Self {
        let p = PacketSpec::default();
        Self {
            j0: p.j0,
            k0: p.k0,
            delta_j: DEFAULT_PACKET_WIDTH,
            snap_momentum: p.snap_momentum,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SosConfig {
    pub nx: usize,
    pub np: usize,
    pub periods: usize,
}

impl Default for SosConfig {
    fn default() -> Self {
        Self {
            nx: 20,
            np: 20,
            periods: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveConfig {
    pub periods: usize,
    pub snapshots_per_period: usize,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            periods: 20,
            snapshots_per_period: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RotationConfig {
    pub x0: f64,
    pub p_lo: f64,
    pub p_hi: f64,
    pub resolution: usize,
    pub iterations: usize,
}

impl Default for RotationConfig {
    fn default() -> Self {
        let s = RotationScan::default();
        Self {
            x0: s.x0,
            p_lo: s.p_lo,
            p_hi: s.p_hi,
            resolution: s.resolution,
            iterations: s.iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FloquetConfig {
    pub sigma: f64,
    /// Minimum peak prominence as a fraction of the tallest peak.
    pub prominence: f64,
    pub weight_threshold: f64,
    pub grid_points: usize,
}

impl Default for FloquetConfig {
    fn default() -> Self {
        Self {
            sigma: DEFAULT_SIGMA,
            prominence: DEFAULT_PROMINENCE,
            weight_threshold: WEIGHT_THRESHOLD,
            grid_points: DEFAULT_GRID_POINTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConcurrenceConfig {
    pub pairs: Vec<[usize; 2]>,
    pub periods: usize,
    pub samples_per_period: usize,
    pub estimator: String,
}

impl Default for ConcurrenceConfig {
    fn default() -> Self {
        Self {
            pairs: DEFAULT_PAIRS.iter().map(|&(i, j)| [i, j]).collect(),
            periods: 20,
            samples_per_period: DEFAULT_SAMPLES_PER_PERIOD,
            estimator: DEFAULT_ESTIMATOR.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleConfig {
    pub n_samples: usize,
    pub periods: usize,
    pub rng_seed: u64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            n_samples: 1000,
            periods: 20,
            rng_seed: 1,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub omega: Option<f64>,
    pub j0: Option<usize>,
    pub k0: Option<f64>,
    pub sigma: Option<f64>,
    pub periods: Option<usize>,
    pub seed: Option<u64>,
}

impl Overrides {
    /// Configuration keys these overrides replace.
    pub fn keys(&self) -> Vec<&'static str> {
        let mut keys = Vec::new();
        if self.omega.is_some() {
            keys.push("omega");
        }
        if self.j0.is_some() {
            keys.push("packet.j0");
        }
        if self.k0.is_some() {
            keys.push("packet.k0");
        }
        if self.sigma.is_some() {
            keys.push("floquet.sigma");
        }
        if self.periods.is_some() {
            keys.extend(["sos.periods", "evolve.periods", "concurrence.periods", "ensemble.periods"]);
        }
        if self.seed.is_some() {
            keys.push("ensemble.rng_seed");
        }
        keys
    }
}

impl ExperimentConfig {
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(dir) = &o.output_dir {
            self.output_dir = dir.clone();
        }
        if let Some(v) = o.omega {
            self.omega = v;
        }
        if let Some(v) = o.j0 {
            self.packet.j0 = v;
        }
        if let Some(v) = o.k0 {
            self.packet.k0 = v;
        }
        if let Some(v) = o.sigma {
            self.floquet.sigma = v;
        }
        if let Some(n) = o.periods {
            self.sos.periods = n;
            self.evolve.periods = n;
            self.concurrence.periods = n;
            self.ensemble.periods = n;
        }
        if let Some(seed) = o.seed {
            self.ensemble.rng_seed = seed;
        }
    }

    pub fn sim_params(&self) -> SimParams {
        SimParams {
            coupling: self.coupling,
            field: self.field,
            sites: self.sites,
            omega: self.omega,
            drive: self.drive.parse().unwrap_or_default(),
            quantum_substeps: self.quantum_substeps,
            classical_substeps: self.classical_substeps,
            scheme: self.scheme.clone(),
            kick_strength: self.kick_strength,
        }
    }

    pub fn packet_spec(&self) -> PacketSpec {
        PacketSpec {
            j0: self.packet.j0,
            k0: self.packet.k0,
            delta_j: self.packet.delta_j,
            snap_momentum: self.packet.snap_momentum,
        }
    }

    pub fn rotation_scan(&self) -> RotationScan {
        RotationScan {
            x0: self.rotation.x0,
            p_lo: self.rotation.p_lo,
            p_hi: self.rotation.p_hi,
            resolution: self.rotation.resolution,
            iterations: self.rotation.iterations,
        }
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.concurrence.pairs.iter().map(|&[i, j]| (i, j)).collect()
    }

    /// The resolved configuration as TOML, including every default.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Semantic checks; `source` is only used to point at lines.
    pub fn validate(&self, source: &str) -> Result<ValidatedParams, ConfigError> {
        let invalid = |key: &str, message: String| {
            let (section, name) = match key.split_once('.') {
                Some((s, n)) => (Some(s), n),
                None => (None, key),
            };
            ConfigError::InvalidValue {
                key: key.to_string(),
                line: key_line(source, section, name),
                message,
            }
        };
        if self.drive.parse::<Drive>().is_err() {
            return Err(invalid("drive", format!("`{}` is not one of sinusoidal, kicked", self.drive)));
        }
        let params = self.sim_params().validate().map_err(|e| {
            use shearless_core::Error as E;
            let key = match &e {
                E::NonFinite { name, .. } => name.to_string(),
                E::NonPositiveOmega(_) => "omega".into(),
                E::BadSiteCount(_) => "N".into(),
                E::ZeroSubsteps if self.quantum_substeps == 0 => "quantum_substeps".into(),
                E::ZeroSubsteps => "classical_substeps".into(),
                E::ZeroCoupling => "J".into(),
                E::UnknownScheme(_) => "scheme".into(),
                _ => "params".into(),
            };
            invalid(&key, e.to_string())
        })?;

        let p = &self.packet;
        if !(p.delta_j > 0.0 && p.delta_j.is_finite()) {
            return Err(invalid("packet.delta_j", format!("must be positive, got {}", p.delta_j)));
        }
        if p.j0 < 1 || p.j0 > self.sites {
            return Err(invalid("packet.j0", format!("must lie in 1..={}, got {}", self.sites, p.j0)));
        }
        if !p.k0.is_finite() {
            return Err(invalid("packet.k0", "must be finite".into()));
        }

        for (key, value) in [("sos.nx", self.sos.nx), ("sos.np", self.sos.np)] {
            if value == 0 {
                return Err(invalid(key, "must be at least 1".into()));
            }
        }

        let e = &self.evolve;
        if e.snapshots_per_period == 0 || self.quantum_substeps % e.snapshots_per_period != 0 {
            return Err(invalid(
                "evolve.snapshots_per_period",
                format!("must divide quantum_substeps = {}", self.quantum_substeps),
            ));
        }

        let r = &self.rotation;
        if !(r.p_lo.is_finite() && r.p_lo >= -PI) {
            return Err(invalid("rotation.p_lo", format!("must lie in [-pi, pi], got {}", r.p_lo)));
        }
        if !(r.p_hi.is_finite() && r.p_hi <= PI && r.p_hi > r.p_lo) {
            return Err(invalid("rotation.p_hi", format!("must lie in (p_lo, pi], got {}", r.p_hi)));
        }
        if !r.x0.is_finite() {
            return Err(invalid("rotation.x0", "must be finite".into()));
        }
        if r.resolution < 3 {
            return Err(invalid("rotation.resolution", "must be at least 3".into()));
        }
        if r.iterations < MIN_ROTATION_ITERATIONS {
            return Err(invalid(
                "rotation.iterations",
                format!("must be at least {MIN_ROTATION_ITERATIONS}"),
            ));
        }

        let f = &self.floquet;
        if !(f.sigma > 0.0 && f.sigma.is_finite()) {
            return Err(invalid("floquet.sigma", format!("must be positive, got {}", f.sigma)));
        }
        if !(0.0..1.0).contains(&f.prominence) {
            return Err(invalid("floquet.prominence", format!("must lie in [0, 1), got {}", f.prominence)));
        }
        if !(0.0..1.0).contains(&f.weight_threshold) {
            return Err(invalid(
                "floquet.weight_threshold",
                format!("must lie in [0, 1), got {}", f.weight_threshold),
            ));
        }
        if f.grid_points < 3 {
            return Err(invalid("floquet.grid_points", "must be at least 3".into()));
        }

        let c = &self.concurrence;
        if c.pairs.is_empty() {
            return Err(invalid("concurrence.pairs", "at least one pair is required".into()));
        }
        for &[i, j] in &c.pairs {
            if i < 1 || j < 1 || i > self.sites || j > self.sites || i == j {
                return Err(invalid(
                    "concurrence.pairs",
                    format!("[{i}, {j}] must name two distinct sites in 1..={}", self.sites),
                ));
            }
        }
        if c.samples_per_period == 0 || self.quantum_substeps % c.samples_per_period != 0 {
            return Err(invalid(
                "concurrence.samples_per_period",
                format!("must divide quantum_substeps = {}", self.quantum_substeps),
            ));
        }
        if let Err(e) = lookup_estimator(&c.estimator) {
            return Err(invalid("concurrence.estimator", e.to_string()));
        }

        if self.ensemble.n_samples == 0 {
            return Err(invalid("ensemble.n_samples", "must be at least 1".into()));
        }
        Ok(params)
    }
}

/// Parses and validates configuration text. Missing keys take their defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let config = parse_unchecked(text)?;
    config.validate(text)?;
    Ok(config)
}

/// Parses `text`, applies command-line overrides, then validates the result.
pub fn resolve(text: &str, overrides: &Overrides) -> Result<(ExperimentConfig, ValidatedParams), ConfigError> {
    let mut config = parse_unchecked(text)?;
    config.apply(overrides);
    let params = config.validate(text).map_err(|e| match e {
        ConfigError::InvalidValue { key, message, .. } if overrides.keys().contains(&key.as_str()) => {
            ConfigError::InvalidValue {
                key,
                line: None,
                message: format!("{message} (from command line)"),
            }
        }
        other => other,
    })?;
    Ok((config, params))
}

fn parse_unchecked(text: &str) -> Result<ExperimentConfig, ConfigError> {
    if let Err(e) = text.parse::<toml::Table>() {
        return Err(ConfigError::Syntax {
            line: e.span().map_or(1, |s| line_of(text, s.start)),
            message: e.message().trim().to_string(),
        });
    }
    let config: ExperimentConfig = toml::from_str(text).map_err(|e| {
        let offset = e.span().map_or(0, |s| s.start);
        let line = line_of(text, offset);
        let message = e.message().trim().to_string();
        match message.strip_prefix("unknown field `").and_then(|m| m.split_once('`')) {
            Some((name, _)) => ConfigError::UnknownKey {
                key: qualify(text, offset, name),
                line,
            },
            None => ConfigError::InvalidValue {
                key: key_at(text, offset),
                line: Some(line),
                message,
            },
        }
    })?;
    Ok(config)
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Section in force at `offset`, from the closest preceding `[header]`.
fn section_at(text: &str, offset: usize) -> Option<String> {
    let line_start = text[..offset.min(text.len())].rfind('\n').map_or(0, |i| i + 1);
    text[..line_start]
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| l.starts_with('['))
        .map(|l| l.trim_matches(|c| c == '[' || c == ']').trim().to_string())
}

fn qualify(text: &str, offset: usize, name: &str) -> String {
    let line = text[offset.min(text.len())..].lines().next().unwrap_or("").trim();
    if line.starts_with('[') {
        return name.to_string();
    }
    match section_at(text, offset) {
        Some(section) => format!("{section}.{name}"),
        None => name.to_string(),
    }
}

/// Dotted key of the assignment on the line containing `offset`.
fn key_at(text: &str, offset: usize) -> String {
    let start = text[..offset.min(text.len())].rfind('\n').map_or(0, |i| i + 1);
    let line = text[start..].lines().next().unwrap_or("");
    let name = line.split('=').next().unwrap_or("").trim();
    qualify(text, start, name)
}

/// Line on which `key` is assigned inside `section` (top level when None).
fn key_line(text: &str, section: Option<&str>, key: &str) -> Option<usize> {
    let mut current: Option<String> = None;
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            current = Some(line.trim_matches(|c| c == '[' || c == ']').trim().to_string());
            continue;
        }
        let Some((name, _)) = line.split_once('=') else { continue };
        if current.as_deref() == section && name.trim() == key {
            return Some(n + 1);
        }
    }
    None
}
