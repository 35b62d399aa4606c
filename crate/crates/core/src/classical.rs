//! Classical image dynamics of the driven Harper Hamiltonian
//! `H(x, p, t) = J cos p + B0 F(t) cos(2 pi x / N)`.
//!
//! Equations of motion:
//!
//! ```text
//! dx/dt = -J sin p
//! dp/dt = (2 pi / N) B0 F(t) sin(2 pi x / N)
//! ```
//!
//! The Hamiltonian is separable, so the flow splits into a kick (p only) and
//! a drift (x only). [`step`] is the symmetric kick-drift-kick substep with
//! the field sampled at the substep midpoint; the period maps chain it with
//! the composition scheme selected in the parameters.

use std::f64::consts::{PI, TAU};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::params::{Drive, PacketSpec, ValidatedParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub x: f64,
    pub p: f64,
}

impl PhasePoint {
    pub fn new(x: f64, p: f64) -> Self {
        Self { x, p }
    }

    /// Reduces x into (0, N] and p into (-pi, pi].
    pub fn canonical(self, sites: usize) -> Self {
        Self {
            x: wrap_position(self.x, sites as f64),
            p: wrap_momentum(self.p),
        }
    }
}

fn wrap_position(x: f64, n: f64) -> f64 {
    let r = x.rem_euclid(n);
    if r <= 0.0 {
        n
    } else {
        r
    }
}

fn wrap_momentum(p: f64) -> f64 {
    let r = (p + PI).rem_euclid(TAU) - PI;
    if r <= -PI {
        PI
    } else {
        r
    }
}

pub fn energy(params: &ValidatedParams, point: PhasePoint, t: f64) -> f64 {
    let hopping = params.coupling() * point.p.cos();
    // the kicked field only acts at the impulses
    let field = match params.drive() {
        Drive::Sinusoidal => params.field() * (params.omega() * t).sin(),
        Drive::Kicked => 0.0,
    };
    hopping + field * (params.lattice_wavenumber() * point.x).cos()
}

/// One symmetric substep of signed length `h`, field taken at `t + h/2`.
#[inline]
fn substep(params: &ValidatedParams, z: PhasePoint, t: f64, h: f64) -> PhasePoint {
    let q = params.lattice_wavenumber();
    let half_kick = q * params.field() * (params.omega() * (t + 0.5 * h)).sin() * 0.5 * h;
    kick_drift_kick(z, q, half_kick, params.coupling() * h)
}

#[inline]
fn kick_drift_kick(z: PhasePoint, q: f64, half_kick: f64, jh: f64) -> PhasePoint {
    let mut p = z.p + half_kick * (q * z.x).sin();
    let x = z.x - jh * p.sin();
    p += half_kick * (q * x).sin();
    PhasePoint { x, p }
}

/// Advances `point` by one Strang substep of length `dt` starting at time `t`.
///
/// Coordinates are not wrapped, so repeated steps trace the lifted orbit.
pub fn step(params: &ValidatedParams, point: PhasePoint, t: f64, dt: f64) -> Result<PhasePoint> {
    if !(dt > 0.0) {
        return Err(Error::NonPositiveStep(dt));
    }
    if params.drive() == Drive::Kicked {
        return Err(Error::KickedDriveNotSampleable);
    }
    Ok(substep(params, point, t, dt))
}

/// Integrates the sinusoidally driven flow from `t0` to `t1` (either direction).
pub fn integrate(params: &ValidatedParams, point: PhasePoint, t0: f64, t1: f64) -> Result<PhasePoint> {
    if params.drive() == Drive::Kicked {
        return Err(Error::KickedDriveNotSampleable);
    }
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(point);
    }
    let periods = span.abs() / params.period();
    let n = ((periods * params.classical_substeps() as f64) - 1e-9).ceil().max(1.0) as usize;
    let h = span / n as f64;
    let weights = params.scheme().weights();
    let mut z = point;
    for s in 0..n {
        let mut t = t0 + s as f64 * h;
        for &w in weights {
            z = substep(params, z, t, w * h);
            t += w * h;
        }
    }
    Ok(z)
}

/// One period of the kicked Harper map: impulse, then free drift over T.
pub fn map_kicked(params: &ValidatedParams, point: PhasePoint) -> PhasePoint {
    let q = params.lattice_wavenumber();
    let p = point.p + q * params.kick_strength() * (q * point.x).sin();
    let x = point.x - params.coupling() * p.sin() * params.period();
    PhasePoint { x, p }
}

/// Precomputed stroboscopic map over one period starting at t = 0 (mod T).
#[derive(Debug, Clone)]
pub struct PeriodMap {
    kind: MapKind,
}

#[derive(Debug, Clone)]
enum MapKind {
    Flow {
        q: f64,
        // (half kick coefficient, J * h) per substep
        stages: Vec<(f64, f64)>,
    },
    Kicked(Box<ValidatedParams>),
}

impl PeriodMap {
    pub fn new(params: &ValidatedParams) -> Self {
        let kind = match params.drive() {
            Drive::Kicked => MapKind::Kicked(Box::new(params.clone())),
            Drive::Sinusoidal => {
                let q = params.lattice_wavenumber();
                let m = params.classical_substeps();
                let h = params.period() / m as f64;
                let weights = params.scheme().weights();
                let mut stages = Vec::with_capacity(m * weights.len());
                for s in 0..m {
                    let mut t = s as f64 * h;
                    for &w in weights {
                        let hw = w * h;
                        let half_kick =
                            q * params.field() * (params.omega() * (t + 0.5 * hw)).sin() * 0.5 * hw;
                        stages.push((half_kick, params.coupling() * hw));
                        t += hw;
                    }
                }
                MapKind::Flow { q, stages }
            }
        };
        Self { kind }
    }

    /// Applies the map to lifted coordinates.
    pub fn apply(&self, point: PhasePoint) -> PhasePoint {
        match &self.kind {
            MapKind::Flow { q, stages } => stages
                .iter()
                .fold(point, |z, &(k, jh)| kick_drift_kick(z, *q, k, jh)),
            MapKind::Kicked(params) => map_kicked(params, point),
        }
    }
}

/// One-period stroboscopic map for either drive, in lifted coordinates.
pub fn period_map(params: &ValidatedParams, point: PhasePoint) -> PhasePoint {
    PeriodMap::new(params).apply(point)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitSample {
    pub t: f64,
    pub x: f64,
    pub p: f64,
}

/// Stroboscopic trajectory on the real line (no modular wrap).
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedOrbit {
    pub samples: Vec<OrbitSample>,
}

impl LiftedOrbit {
    pub fn canonical(&self, sites: usize) -> Vec<PhasePoint> {
        self.samples
            .iter()
            .map(|s| PhasePoint::new(s.x, s.p).canonical(sites))
            .collect()
    }
}

pub fn lifted_orbit(params: &ValidatedParams, seed: PhasePoint, n_periods: usize) -> LiftedOrbit {
    let map = PeriodMap::new(params);
    lifted_orbit_with(&map, params.period(), seed, n_periods)
}

fn lifted_orbit_with(map: &PeriodMap, period: f64, seed: PhasePoint, n_periods: usize) -> LiftedOrbit {
    let mut samples = Vec::with_capacity(n_periods + 1);
    let mut z = seed;
    samples.push(OrbitSample { t: 0.0, x: z.x, p: z.p });
    for n in 1..=n_periods {
        z = map.apply(z);
        samples.push(OrbitSample {
            t: n as f64 * period,
            x: z.x,
            p: z.p,
        });
    }
    LiftedOrbit { samples }
}

/// Stroboscopic points (t = nT, n = 0..=n_periods) for each seed, canonicalized.
#[derive(Debug, Clone, PartialEq)]
pub struct SosResult {
    pub orbits: Vec<Vec<PhasePoint>>,
}

pub fn surface_of_section(params: &ValidatedParams, seeds: &[PhasePoint], n_periods: usize) -> SosResult {
    let map = PeriodMap::new(params);
    let n = params.sites();
    let orbits = seeds
        .par_iter()
        .map(|&seed| {
            lifted_orbit_with(&map, params.period(), seed, n_periods)
                .samples
                .into_iter()
                .map(|s| PhasePoint::new(s.x, s.p).canonical(n))
                .collect()
        })
        .collect();
    SosResult { orbits }
}

/// Evenly spaced seed grid covering (0, N] x (-pi, pi], cell centered.
pub fn seed_grid(sites: usize, nx: usize, np: usize) -> Vec<PhasePoint> {
    let n = sites as f64;
    let mut seeds = Vec::with_capacity(nx * np);
    for i in 0..nx {
        for k in 0..np {
            let x = n * (i as f64 + 0.5) / nx as f64;
            let p = -PI + TAU * (k as f64 + 0.5) / np as f64;
            seeds.push(PhasePoint::new(x, p));
        }
    }
    seeds
}

pub const MIN_ROTATION_ITERATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationNumber {
    /// Mean winding in cells per period.
    pub nu: f64,
    /// |nu_n - nu_{n/2}|.
    pub convergence_error: f64,
}

pub fn rotation_number(params: &ValidatedParams, seed: PhasePoint, n_iterations: usize) -> Result<RotationNumber> {
    let map = PeriodMap::new(params);
    rotation_number_with(&map, params.sites(), seed, n_iterations)
}

fn rotation_number_with(map: &PeriodMap, sites: usize, seed: PhasePoint, n_iterations: usize) -> Result<RotationNumber> {
    if n_iterations < MIN_ROTATION_ITERATIONS {
        return Err(Error::TooFewIterations {
            min: MIN_ROTATION_ITERATIONS,
            got: n_iterations,
        });
    }
    let half = n_iterations / 2;
    let cells = sites as f64;
    let mut z = seed;
    let mut nu_half = 0.0;
    for n in 1..=n_iterations {
        z = map.apply(z);
        if n == half {
            nu_half = (z.x - seed.x) / (half as f64 * cells);
        }
    }
    let nu = (z.x - seed.x) / (n_iterations as f64 * cells);
    Ok(RotationNumber {
        nu,
        convergence_error: (nu - nu_half).abs(),
    })
}

/// Rotation-number scan over initial momenta at fixed position.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationScan {
    pub x0: f64,
    pub p_lo: f64,
    pub p_hi: f64,
    pub resolution: usize,
    pub iterations: usize,
}

impl Default for RotationScan {
    fn default() -> Self {
        Self {
            x0: 25.0,
            p_lo: 0.0,
            p_hi: PI,
            resolution: 400,
            iterations: 200,
        }
    }
}

impl RotationScan {
    /// Sample momenta at cell centers, so the open end points are never hit.
    pub fn momenta(&self) -> Vec<f64> {
        let width = self.p_hi - self.p_lo;
        (0..self.resolution)
            .map(|i| self.p_lo + width * (i as f64 + 0.5) / self.resolution as f64)
            .collect()
    }

    fn check(&self) -> Result<()> {
        let (lo, hi) = (self.p_lo, self.p_hi);
        if !(lo.is_finite() && hi.is_finite() && lo >= -PI && hi <= PI && lo < hi) {
            return Err(Error::BadScanRange { lo, hi });
        }
        if self.resolution < 3 {
            return Err(Error::TooFewIterations {
                min: 3,
                got: self.resolution,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanPoint {
    pub p0: f64,
    pub rotation: RotationNumber,
}

pub fn rotation_profile(params: &ValidatedParams, scan: &RotationScan) -> Result<Vec<ScanPoint>> {
    scan.check()?;
    let map = PeriodMap::new(params);
    scan.momenta()
        .into_par_iter()
        .map(|p0| {
            let seed = PhasePoint::new(scan.x0, p0);
            rotation_number_with(&map, params.sites(), seed, scan.iterations)
                .map(|rotation| ScanPoint { p0, rotation })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShearlessLocation {
    /// Refined momentum of the rotation-number extremum.
    pub p: f64,
    /// Rotation number at the discrete extremum.
    pub nu: f64,
    pub is_maximum: bool,
}

/// Locates an interior extremum of a sampled profile by a three-point parabola.
pub fn locate_extremum(profile: &[ScanPoint]) -> Result<ShearlessLocation> {
    let n = profile.len();
    if n < 3 {
        return Err(Error::NotFound);
    }
    let nu: Vec<f64> = profile.iter().map(|s| s.rotation.nu).collect();
    let (imax, imin) = nu.iter().enumerate().fold((0, 0), |(a, b), (i, &v)| {
        (if v > nu[a] { i } else { a }, if v < nu[b] { i } else { b })
    });
    let interior = |i: usize| i > 0 && i + 1 < n;
    let baseline = 0.5 * (nu[0] + nu[n - 1]);
    let chosen = match (interior(imax), interior(imin)) {
        (true, true) => {
            if (nu[imax] - baseline).abs() >= (nu[imin] - baseline).abs() {
                imax
            } else {
                imin
            }
        }
        (true, false) => imax,
        (false, true) => imin,
        (false, false) => return Err(Error::NotFound),
    };
    let (y0, y1, y2) = (nu[chosen - 1], nu[chosen], nu[chosen + 1]);
    let h = profile[chosen + 1].p0 - profile[chosen].p0;
    let curvature = y2 - 2.0 * y1 + y0;
    let shift = if curvature != 0.0 {
        (-0.5 * h * (y2 - y0) / curvature).clamp(-h, h)
    } else {
        0.0
    };
    Ok(ShearlessLocation {
        p: profile[chosen].p0 + shift,
        nu: y1,
        is_maximum: chosen == imax,
    })
}

/// Scans the rotation number at fixed x0 and returns the extremum location.
pub fn find_shearless(params: &ValidatedParams, scan: &RotationScan) -> Result<ShearlessLocation> {
    let profile = rotation_profile(params, scan)?;
    locate_extremum(&profile)
}

/// Spread of a classical cloud matched to a quantum packet, per period.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpread {
    /// 1 - R with R the mean resultant length of exp(2 pi i x / N).
    pub circular_variance: Vec<f64>,
    /// Squared circular standard deviation in sites^2.
    pub variance_sites: Vec<f64>,
}

pub fn ensemble_spread(
    params: &ValidatedParams,
    packet: &PacketSpec,
    n_samples: usize,
    n_periods: usize,
    rng_seed: u64,
) -> Result<EnsembleSpread> {
    packet.validate(params.sites())?;
    if n_samples == 0 {
        return Err(Error::NoSamples);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let xs = Normal::new(packet.j0 as f64, packet.delta_j).expect("positive width");
    let ps = Normal::new(packet.k0, 0.5 / packet.delta_j).expect("positive width");
    let seeds: Vec<PhasePoint> = (0..n_samples)
        .map(|_| {
            let x = xs.sample(&mut rng);
            let p = ps.sample(&mut rng);
            PhasePoint::new(x, p)
        })
        .collect();

    let map = PeriodMap::new(params);
    let tracks: Vec<Vec<f64>> = seeds
        .par_iter()
        .map(|&seed| {
            let mut z = seed;
            let mut xs = Vec::with_capacity(n_periods + 1);
            xs.push(z.x);
            for _ in 0..n_periods {
                z = map.apply(z);
                xs.push(z.x);
            }
            xs
        })
        .collect();

    let q = params.lattice_wavenumber();
    let scale = (params.sites() as f64 / TAU).powi(2);
    let mut circular_variance = Vec::with_capacity(n_periods + 1);
    let mut variance_sites = Vec::with_capacity(n_periods + 1);
    for n in 0..=n_periods {
        let (mut c, mut s) = (0.0, 0.0);
        for track in &tracks {
            c += (q * track[n]).cos();
            s += (q * track[n]).sin();
        }
        let r = (c.hypot(s) / n_samples as f64).min(1.0);
        circular_variance.push(1.0 - r);
        variance_sites.push(-2.0 * r.ln() * scale);
    }
    Ok(EnsembleSpread {
        circular_variance,
        variance_sites,
    })
}
