//! Physical and numerical parameters shared by every module.
//!
//! Units: hbar = 1 and time is measured in units of 1/|J|.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scheme::{self, Composition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Drive {
    /// F(t) = sin(omega t).
    #[default]
    Sinusoidal,
    /// F(t) = sum_n delta(t - nT), applied as one impulse at the start of each period.
    Kicked,
}

impl Drive {
    pub fn as_str(self) -> &'static str {
        match self {
            Drive::Sinusoidal => "sinusoidal",
            Drive::Kicked => "kicked",
        }
    }
}

impl fmt::Display for Drive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Drive {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sinusoidal" | "sine" | "sin" => Ok(Drive::Sinusoidal),
            "kicked" | "kick" => Ok(Drive::Kicked),
            other => Err(format!("unknown drive `{other}` (expected sinusoidal or kicked)")),
        }
    }
}

pub const DEFAULT_COUPLING: f64 = -1.0;
pub const DEFAULT_FIELD: f64 = 2.0;
pub const DEFAULT_SITES: usize = 100;
pub const DEFAULT_OMEGA: f64 = 0.20;
pub const DEFAULT_QUANTUM_SUBSTEPS: usize = 1000;
pub const DEFAULT_CLASSICAL_SUBSTEPS: usize = 2000;
pub const DEFAULT_PACKET_WIDTH: f64 = 5.0;

/// Unvalidated simulation parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    /// Exchange coupling J. Ferromagnetic chains have J < 0.
    pub coupling: f64,
    /// Field amplitude B0.
    pub field: f64,
    /// Number of sites N on the ring.
    pub sites: usize,
    pub omega: f64,
    pub drive: Drive,
    pub quantum_substeps: usize,
    pub classical_substeps: usize,
    /// Name of the composition scheme, see [`crate::scheme`].
    pub scheme: String,
    /// Impulse strength of the kicked drive; `None` means B0 * T.
    pub kick_strength: Option<f64>,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            coupling: DEFAULT_COUPLING,
            field: DEFAULT_FIELD,
            sites: DEFAULT_SITES,
            omega: DEFAULT_OMEGA,
            drive: Drive::Sinusoidal,
            quantum_substeps: DEFAULT_QUANTUM_SUBSTEPS,
            classical_substeps: DEFAULT_CLASSICAL_SUBSTEPS,
            scheme: scheme::DEFAULT_SCHEME.to_string(),
            kick_strength: None,
        }
    }
}

impl SimParams {
    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = omega;
        self
    }

    pub fn with_field(mut self, field: f64) -> Self {
        self.field = field;
        self
    }

    pub fn with_drive(mut self, drive: Drive) -> Self {
        self.drive = drive;
        self
    }

    pub fn with_scheme(mut self, name: &str) -> Self {
        self.scheme = name.to_string();
        self
    }

    pub fn validate(&self) -> Result<ValidatedParams> {
        validate(self)
    }
}

/// Parameters that passed validation, with the drive period resolved.
#[derive(Debug, Clone)]
pub struct ValidatedParams {
    raw: SimParams,
    period: f64,
    scheme: &'static dyn Composition,
}

pub fn validate(params: &SimParams) -> Result<ValidatedParams> {
    for (name, value) in [
        ("J", params.coupling),
        ("B0", params.field),
        ("omega", params.omega),
    ] {
        if !value.is_finite() {
            return Err(Error::NonFinite { name, value });
        }
    }
    if params.omega <= 0.0 {
        return Err(Error::NonPositiveOmega(params.omega));
    }
    if params.sites < 4 || params.sites % 2 != 0 {
        return Err(Error::BadSiteCount(params.sites));
    }
    if params.quantum_substeps == 0 || params.classical_substeps == 0 {
        return Err(Error::ZeroSubsteps);
    }
    if params.coupling == 0.0 {
        return Err(Error::ZeroCoupling);
    }
    if let Some(k) = params.kick_strength {
        if !k.is_finite() {
            return Err(Error::NonFinite {
                name: "kick_strength",
                value: k,
            });
        }
    }
    let scheme = scheme::lookup(&params.scheme)?;
    Ok(ValidatedParams {
        raw: params.clone(),
        period: TAU / params.omega,
        scheme,
    })
}

impl ValidatedParams {
    pub fn raw(&self) -> &SimParams {
        &self.raw
    }

    pub fn coupling(&self) -> f64 {
        self.raw.coupling
    }

    pub fn field(&self) -> f64 {
        self.raw.field
    }

    pub fn sites(&self) -> usize {
        self.raw.sites
    }

    pub fn omega(&self) -> f64 {
        self.raw.omega
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn drive(&self) -> Drive {
        self.raw.drive
    }

    pub fn quantum_substeps(&self) -> usize {
        self.raw.quantum_substeps
    }

    pub fn classical_substeps(&self) -> usize {
        self.raw.classical_substeps
    }

    pub fn scheme(&self) -> &'static dyn Composition {
        self.scheme
    }

    /// Impulse strength of one kick of the kicked drive.
    pub fn kick_strength(&self) -> f64 {
        self.raw
            .kick_strength
            .unwrap_or(self.raw.field * self.period)
    }

    /// Lattice wavenumber 2 pi / N.
    pub fn lattice_wavenumber(&self) -> f64 {
        TAU / self.raw.sites as f64
    }

    /// cos(2 pi j / N) for the 1-based site index j.
    pub fn potential(&self, site: usize) -> f64 {
        (self.lattice_wavenumber() * site as f64).cos()
    }

    pub fn drive_value(&self, t: f64) -> Result<f64> {
        drive_value(self, t)
    }

    /// Non-fatal remarks about the parameter choice.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.raw.coupling > 0.0 {
            out.push(format!(
                "J = {} > 0 is antiferromagnetic; the chain studied here is ferromagnetic (J < 0)",
                self.raw.coupling
            ));
        }
        if self.raw.sites % 4 != 0 {
            out.push(format!(
                "N = {} is not divisible by 4; the field nodes fall between sites",
                self.raw.sites
            ));
        }
        out
    }
}

/// Drive factor F(t) = sin(omega t). The kicked drive has no pointwise value.
pub fn drive_value(params: &ValidatedParams, t: f64) -> Result<f64> {
    match params.drive() {
        Drive::Sinusoidal => Ok((params.omega() * t).sin()),
        Drive::Kicked => Err(Error::KickedDriveNotSampleable),
    }
}

/// Initial Gaussian spin wavepacket.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketSpec {
    /// Center site, 1-based.
    pub j0: usize,
    /// Center momentum in radians per site.
    pub k0: f64,
    /// Amplitude width in sites.
    pub delta_j: f64,
    /// Round k0 to the nearest ring momentum 2 pi m / N.
    pub snap_momentum: bool,
}

impl Default for PacketSpec {
    fn default() -> Self {
        Self {
            j0: 25,
            k0: 0.0,
            delta_j: DEFAULT_PACKET_WIDTH,
            snap_momentum: false,
        }
    }
}

impl PacketSpec {
    pub fn new(j0: usize, k0: f64) -> Self {
        Self {
            j0,
            k0,
            ..Self::default()
        }
    }

    pub fn validate(&self, sites: usize) -> Result<()> {
        if !(self.delta_j > 0.0 && self.delta_j.is_finite()) {
            return Err(Error::InvalidPacket(format!(
                "width delta_j must be positive, got {}",
                self.delta_j
            )));
        }
        if self.j0 < 1 || self.j0 > sites {
            return Err(Error::InvalidPacket(format!(
                "center j0 = {} outside 1..={sites}",
                self.j0
            )));
        }
        if !self.k0.is_finite() {
            return Err(Error::InvalidPacket(format!("k0 = {} is not finite", self.k0)));
        }
        Ok(())
    }

    /// Center momentum actually applied, after optional grid snapping.
    pub fn effective_momentum(&self, sites: usize) -> f64 {
        if self.snap_momentum {
            let dk = TAU / sites as f64;
            (self.k0 / dk).round() * dk
        } else {
            self.k0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn paper_params(omega: f64) -> SimParams {
        SimParams::default().with_omega(omega)
    }

    #[test]
    fn validate_computes_period() {
        let p = paper_params(0.12).validate().unwrap();
        assert!((p.period() - 52.3599).abs() < 1e-4);
        assert!((p.period() * p.omega() - TAU).abs() <= 1e-12);
        assert_eq!(p.coupling(), -1.0);
        assert_eq!(p.field(), 2.0);
        assert_eq!(p.sites(), 100);
    }

    #[test]
    fn validate_rejects_bad_fields() {
        assert_eq!(
            paper_params(0.0).validate().unwrap_err(),
            Error::NonPositiveOmega(0.0)
        );
        let mut p = SimParams::default();
        p.sites = 3;
        assert_eq!(p.validate().unwrap_err(), Error::BadSiteCount(3));
        p.sites = 10;
        p.classical_substeps = 0;
        assert_eq!(p.validate().unwrap_err(), Error::ZeroSubsteps);
        let p = SimParams::default().with_scheme("euler");
        assert!(matches!(p.validate(), Err(Error::UnknownScheme(_))));
    }

    #[test]
    fn odd_or_small_site_counts_rejected() {
        for n in [0, 2, 5, 101] {
            let p = SimParams {
                sites: n,
                ..SimParams::default()
            };
            assert_eq!(p.validate().unwrap_err(), Error::BadSiteCount(n));
        }
    }

    #[test]
    fn positive_coupling_only_warns() {
        let p = SimParams {
            coupling: 1.0,
            ..SimParams::default()
        }
        .validate()
        .unwrap();
        assert_eq!(p.warnings().len(), 1);
        assert!(SimParams::default().validate().unwrap().warnings().is_empty());
    }

    #[test]
    fn drive_value_samples_sine() {
        let p = paper_params(0.12).validate().unwrap();
        let t = p.period();
        assert_eq!(p.drive_value(0.0).unwrap(), 0.0);
        assert!((p.drive_value(t / 4.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(p.drive_value(t).unwrap().abs() < 1e-12);
        for i in 0..50 {
            let s = 0.37 * i as f64;
            let a = p.drive_value(s).unwrap();
            let b = p.drive_value(s + t).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn kicked_drive_is_not_sampleable() {
        let p = SimParams::default()
            .with_drive(Drive::Kicked)
            .validate()
            .unwrap();
        assert_eq!(p.drive_value(1.0), Err(Error::KickedDriveNotSampleable));
        assert!((p.kick_strength() - 2.0 * p.period()).abs() < 1e-12);
    }

    #[test]
    fn potential_has_nodes_at_quarter_ring() {
        let p = SimParams::default().validate().unwrap();
        assert!(p.potential(25).abs() < 1e-15);
        assert!(p.potential(75).abs() < 1e-15);
        assert!((p.potential(50) + 1.0).abs() < 1e-15);
        assert!((p.potential(100) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn packet_validation() {
        let ok = PacketSpec::default();
        assert!(ok.validate(100).is_ok());
        let bad = PacketSpec { delta_j: 0.0, ..ok.clone() };
        assert!(bad.validate(100).is_err());
        let bad = PacketSpec { j0: 0, ..ok.clone() };
        assert!(bad.validate(100).is_err());
        let bad = PacketSpec { j0: 101, ..ok };
        assert!(bad.validate(100).is_err());
    }

    #[test]
    fn momentum_snapping() {
        let mut spec = PacketSpec::new(25, 1.0);
        assert_eq!(spec.effective_momentum(100), 1.0);
        spec.snap_momentum = true;
        let k = spec.effective_momentum(100);
        assert!((k - 16.0 * TAU / 100.0).abs() < 1e-15);
        assert!((k - 1.0).abs() <= PI / 100.0);
    }

    #[test]
    fn drive_parses_from_str() {
        assert_eq!("Kicked".parse::<Drive>().unwrap(), Drive::Kicked);
        assert_eq!("sinusoidal".parse::<Drive>().unwrap(), Drive::Sinusoidal);
        assert!("square".parse::<Drive>().is_err());
    }
}
