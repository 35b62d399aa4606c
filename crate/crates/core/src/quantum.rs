//! One-down-spin sector of the driven Heisenberg ring.
//!
//! The state is a vector of amplitudes a_j over the basis |j>, the state with
//! the j-th spin down. Sites are 1-based in the public API and 0-based in
//! storage. The Hamiltonian is
//!
//! ```text
//! (H a)_j = (J/2)(a_{j-1} + a_{j+1}) + B0 F(t) cos(2 pi j / N) a_j
//! ```
//!
//! with periodic indices. The hopping part is diagonal in the discrete
//! Fourier basis (forward transform `exp(-2 pi i m j / N) / sqrt(N)`, band
//! `J cos(2 pi m / N)`), so the propagator applies it exactly and splits the
//! diagonal potential symmetrically around it.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::params::{Drive, PacketSpec, ValidatedParams};

/// Tolerance on sum |a_j|^2 - 1 for a state to count as normalized.
pub const NORM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    amps: Vec<Complex64>,
}

impl WaveFunction {
    /// Wraps amplitudes that are already normalized.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let norm = norm_sqr(&amps);
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { amps })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(mut amps: Vec<Complex64>) -> Result<Self> {
        let norm = norm_sqr(&amps);
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NotNormalized(norm));
        }
        let scale = norm.sqrt().recip();
        amps.iter_mut().for_each(|a| *a *= scale);
        Ok(Self { amps })
    }

    /// The state with only spin `site` (1-based) flipped.
    pub fn basis(sites: usize, site: usize) -> Result<Self> {
        if site < 1 || site > sites {
            return Err(Error::IndexOutOfRange { index: site, n: sites });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); sites];
        amps[site - 1] = Complex64::new(1.0, 0.0);
        Ok(Self { amps })
    }

    /// Normalized plane wave exp(i k j).
    pub fn plane_wave(sites: usize, k: f64) -> Self {
        let scale = (sites as f64).sqrt().recip();
        let amps = (1..=sites)
            .map(|j| Complex64::from_polar(scale, k * j as f64))
            .collect();
        Self { amps }
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    /// Amplitude on the 1-based site.
    pub fn amplitude(&self, site: usize) -> Complex64 {
        self.amps[site - 1]
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amps)
    }

    /// <self|other>.
    pub fn inner(&self, other: &WaveFunction) -> Complex64 {
        inner(&self.amps, &other.amps)
    }

    pub fn with_global_phase(&self, phase: f64) -> Self {
        let factor = Complex64::from_polar(1.0, phase);
        Self {
            amps: self.amps.iter().map(|a| a * factor).collect(),
        }
    }

    /// Cyclic translation by `shift` sites.
    pub fn translated(&self, shift: isize) -> Self {
        let n = self.amps.len() as isize;
        let mut amps = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (j, &a) in self.amps.iter().enumerate() {
            amps[(j as isize + shift).rem_euclid(n) as usize] = a;
        }
        Self { amps }
    }

    pub fn distance(&self, other: &WaveFunction) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

pub(crate) fn norm_sqr(amps: &[Complex64]) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum()
}

pub(crate) fn inner(bra: &[Complex64], ket: &[Complex64]) -> Complex64 {
    bra.iter().zip(ket).map(|(a, b)| a.conj() * b).sum()
}

/// Signed minimal-image distance from `center` to `site` on a ring of `n`.
pub fn ring_offset(site: f64, center: f64, n: f64) -> f64 {
    (site - center + 0.5 * n).rem_euclid(n) - 0.5 * n
}

/// Gaussian spin wavepacket a_j = A exp(-d^2 / (2 delta^2)) exp(i k0 j).
pub fn gaussian_packet(params: &ValidatedParams, spec: &PacketSpec) -> Result<WaveFunction> {
    let n = params.sites();
    spec.validate(n)?;
    let k = spec.effective_momentum(n);
    let width2 = 2.0 * spec.delta_j * spec.delta_j;
    let amps = (1..=n)
        .map(|j| {
            let d = ring_offset(j as f64, spec.j0 as f64, n as f64);
            Complex64::from_polar((-d * d / width2).exp(), k * j as f64)
        })
        .collect();
    WaveFunction::normalized(amps)
}

/// H(t) psi. The kicked drive has no pointwise field value and is rejected.
pub fn apply_hamiltonian(params: &ValidatedParams, psi: &WaveFunction, t: f64) -> Result<Vec<Complex64>> {
    let n = params.sites();
    if psi.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: psi.len(),
        });
    }
    let field = params.field() * params.drive_value(t)?;
    let a = psi.amplitudes();
    let half_j = 0.5 * params.coupling();
    Ok((0..n)
        .map(|i| {
            let left = a[(i + n - 1) % n];
            let right = a[(i + 1) % n];
            (left + right) * half_j + a[i] * (field * params.potential(i + 1))
        })
        .collect())
}

/// <psi|H(t)|psi>.
pub fn expectation_energy(params: &ValidatedParams, psi: &WaveFunction, t: f64) -> Result<f64> {
    let h = apply_hamiltonian(params, psi, t)?;
    Ok(inner(psi.amplitudes(), &h).re)
}

/// Split-operator propagator with cached FFT plans.
pub struct Propagator {
    params: ValidatedParams,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    potential: Vec<f64>,
    band: Vec<f64>,
}

impl std::fmt::Debug for Propagator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Propagator")
            .field("sites", &self.params.sites())
            .field("scheme", &self.params.scheme().name())
            .finish()
    }
}

impl Propagator {
    pub fn new(params: &ValidatedParams) -> Self {
        let n = params.sites();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let potential = (1..=n).map(|j| params.potential(j)).collect();
        let band = (0..n)
            .map(|m| params.coupling() * (TAU * m as f64 / n as f64).cos())
            .collect();
        Self {
            params: params.clone(),
            forward,
            inverse,
            potential,
            band,
        }
    }

    pub fn params(&self) -> &ValidatedParams {
        &self.params
    }

    /// Evolves `psi` from `t0` to `t1 > t0`.
    pub fn propagate(&self, psi: &WaveFunction, t0: f64, t1: f64) -> Result<WaveFunction> {
        if !(t1 > t0) {
            return Err(Error::BadTimeOrder { t0, t1 });
        }
        self.check_len(psi)?;
        let mut amps = psi.amplitudes().to_vec();
        self.evolve_batch(std::slice::from_mut(&mut amps), t0, t1);
        Ok(WaveFunction { amps })
    }

    /// Applies the inverse of [`Propagator::propagate`] over `[t0, t1]`, taking a
    /// state at `t1` back to `t0`.
    pub fn propagate_back(&self, psi: &WaveFunction, t0: f64, t1: f64) -> Result<WaveFunction> {
        if !(t1 > t0) {
            return Err(Error::BadTimeOrder { t0, t1 });
        }
        self.check_len(psi)?;
        let mut amps = psi.amplitudes().to_vec();
        self.evolve_batch(std::slice::from_mut(&mut amps), t1, t0);
        Ok(WaveFunction { amps })
    }

    fn check_len(&self, psi: &WaveFunction) -> Result<()> {
        if psi.len() != self.params.sites() {
            return Err(Error::DimensionMismatch {
                expected: self.params.sites(),
                got: psi.len(),
            });
        }
        Ok(())
    }

    /// Evolves several raw amplitude vectors together from `t0` to `t1`.
    /// Backward evolution (`t1 < t0`) runs the exact inverse of the forward
    /// substep sequence.
    pub fn evolve_batch(&self, states: &mut [Vec<Complex64>], t0: f64, t1: f64) {
        match self.params.drive() {
            Drive::Sinusoidal => self.evolve_driven(states, t0, t1),
            Drive::Kicked => self.evolve_kicked(states, t0, t1),
        }
    }

    fn evolve_driven(&self, states: &mut [Vec<Complex64>], t0: f64, t1: f64) {
        let span = t1 - t0;
        if span == 0.0 {
            return;
        }
        let periods = span.abs() / self.params.period();
        let m = ((periods * self.params.quantum_substeps() as f64) - 1e-9)
            .ceil()
            .max(1.0) as usize;
        let h = span / m as f64;
        let weights = self.params.scheme().weights();
        let hopping: Vec<Vec<Complex64>> = weights.iter().map(|&w| self.hopping_phases(w * h)).collect();
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.forward.get_inplace_scratch_len()];
        let mut diag = vec![Complex64::new(0.0, 0.0); self.params.sites()];
        let field = self.params.field();
        let omega = self.params.omega();
        for s in 0..m {
            let mut t = t0 + s as f64 * h;
            for (w, hop) in weights.iter().zip(&hopping) {
                let hw = w * h;
                let strength = field * (omega * (t + 0.5 * hw)).sin() * 0.5 * hw;
                for (d, v) in diag.iter_mut().zip(&self.potential) {
                    *d = Complex64::from_polar(1.0, -strength * v);
                }
                for state in states.iter_mut() {
                    self.substep(state, &diag, hop, &mut scratch);
                }
                t += hw;
            }
        }
    }

    fn substep(&self, state: &mut [Complex64], diag: &[Complex64], hop: &[Complex64], scratch: &mut [Complex64]) {
        for (a, d) in state.iter_mut().zip(diag) {
            *a *= d;
        }
        self.apply_hopping(state, hop, scratch);
        for (a, d) in state.iter_mut().zip(diag) {
            *a *= d;
        }
    }

    fn apply_hopping(&self, state: &mut [Complex64], hop: &[Complex64], scratch: &mut [Complex64]) {
        self.forward.process_with_scratch(state, scratch);
        for (a, u) in state.iter_mut().zip(hop) {
            *a *= u;
        }
        self.inverse.process_with_scratch(state, scratch);
        let scale = 1.0 / state.len() as f64;
        for a in state.iter_mut() {
            *a *= scale;
        }
    }

    fn hopping_phases(&self, h: f64) -> Vec<Complex64> {
        self.band
            .iter()
            .map(|e| Complex64::from_polar(1.0, -e * h))
            .collect()
    }

    fn kick_phases(&self, sign: f64) -> Vec<Complex64> {
        let k = self.params.kick_strength();
        self.potential
            .iter()
            .map(|v| Complex64::from_polar(1.0, -sign * k * v))
            .collect()
    }

    // Kicks act at t = nT at the start of each period: a kick at nT is applied
    // when going forward through the half-open interval [t0, t1).
    fn evolve_kicked(&self, states: &mut [Vec<Complex64>], t0: f64, t1: f64) {
        let period = self.params.period();
        let eps = 1e-12 * period;
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.forward.get_inplace_scratch_len()];
        if t1 >= t0 {
            let kick = self.kick_phases(1.0);
            let mut t = t0;
            let mut n = ((t0 - eps) / period).ceil();
            while n * period < t1 - eps {
                let tk = n * period;
                self.free_flight(states, tk - t, &mut scratch);
                for state in states.iter_mut() {
                    state.iter_mut().zip(&kick).for_each(|(a, k)| *a *= k);
                }
                t = tk;
                n += 1.0;
            }
            self.free_flight(states, t1 - t, &mut scratch);
        } else {
            let unkick = self.kick_phases(-1.0);
            let mut t = t0;
            let mut n = ((t0 - eps) / period).ceil() - 1.0;
            while n * period >= t1 - eps {
                let tk = n * period;
                self.free_flight(states, tk - t, &mut scratch);
                for state in states.iter_mut() {
                    state.iter_mut().zip(&unkick).for_each(|(a, k)| *a *= k);
                }
                t = tk;
                n -= 1.0;
            }
            self.free_flight(states, t1 - t, &mut scratch);
        }
    }

    fn free_flight(&self, states: &mut [Vec<Complex64>], dt: f64, scratch: &mut [Complex64]) {
        if dt == 0.0 {
            return;
        }
        let hop = self.hopping_phases(dt);
        for state in states.iter_mut() {
            self.apply_hopping(state, &hop, scratch);
        }
    }
}

/// Evolves `psi` from `t0` to `t1 > t0`.
pub fn propagate(params: &ValidatedParams, psi: &WaveFunction, t0: f64, t1: f64) -> Result<WaveFunction> {
    Propagator::new(params).propagate(psi, t0, t1)
}

/// Site occupation P(j) = |a_j|^2, stored 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinDistribution {
    values: Vec<f64>,
}

impl SpinDistribution {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let total: f64 = values.iter().sum();
        if values.iter().any(|&v| v < 0.0) || (total - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized(total));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// P(j) for the 1-based site.
    pub fn at(&self, site: usize) -> f64 {
        self.values[site - 1]
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

pub fn spin_distribution(psi: &WaveFunction) -> SpinDistribution {
    SpinDistribution {
        values: psi.amplitudes().iter().map(|a| a.norm_sqr()).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketDiagnostics {
    /// Circular mean site in (0, N].
    pub center: f64,
    /// Circular standard deviation sqrt(-2 ln R), in sites.
    pub width: f64,
    /// Inverse participation ratio sum_j P(j)^2.
    pub ipr: f64,
}

pub fn packet_diagnostics(dist: &SpinDistribution) -> PacketDiagnostics {
    let n = dist.values.len() as f64;
    let q = TAU / n;
    let (mut c, mut s, mut ipr) = (0.0, 0.0, 0.0);
    for (i, &p) in dist.values.iter().enumerate() {
        let theta = q * (i + 1) as f64;
        c += p * theta.cos();
        s += p * theta.sin();
        ipr += p * p;
    }
    let r = c.hypot(s).min(1.0);
    let mut center = s.atan2(c).rem_euclid(TAU) / q;
    if center <= 0.0 {
        center = n;
    }
    let width = if r > 0.0 {
        (-2.0 * r.ln()).max(0.0).sqrt() / q
    } else {
        f64::INFINITY
    };
    PacketDiagnostics { center, width, ipr }
}

/// Expected ring offset of the spin-down position from `origin`, in sites.
/// Unlike the circular mean it is linear in P, so d/dt gives the drift velocity.
pub fn mean_displacement(dist: &SpinDistribution, origin: f64) -> f64 {
    let n = dist.values.len() as f64;
    dist.values
        .iter()
        .enumerate()
        .map(|(i, &p)| p * ring_offset((i + 1) as f64, origin, n))
        .sum()
}

/// Distance between two positions on a ring of `n` sites.
pub fn circular_distance(a: f64, b: f64, n: usize) -> f64 {
    ring_offset(a, b, n as f64).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::SimParams;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn params(omega: f64, field: f64) -> ValidatedParams {
        SimParams::default()
            .with_omega(omega)
            .with_field(field)
            .validate()
            .unwrap()
    }

    fn random_state(n: usize, seed: u64) -> WaveFunction {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let amps = (0..n)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        WaveFunction::normalized(amps).unwrap()
    }

    #[test]
    fn packet_peak_and_height() {
        let p = params(0.12, 2.0);
        let psi = gaussian_packet(&p, &PacketSpec::default()).unwrap();
        let dist = spin_distribution(&psi);
        let (argmax, _) = dist
            .values()
            .iter()
            .enumerate()
            .fold((0, 0.0), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        assert_eq!(argmax + 1, 25);
        // continuum normalization of exp(-d^2/delta^2): 1/(delta sqrt(pi))
        let expected = 1.0 / (5.0 * PI.sqrt());
        assert!((dist.at(25) - expected).abs() < 1e-3, "{}", dist.at(25));
    }

    #[test]
    fn packet_distribution_symmetric_about_center() {
        let p = params(0.12, 2.0);
        let spec = PacketSpec::new(25, 1.0);
        let dist = spin_distribution(&gaussian_packet(&p, &spec).unwrap());
        for d in 1..50 {
            let left = dist.at(((25 + 100 - d - 1) % 100) + 1);
            let right = dist.at(((25 + d - 1) % 100) + 1);
            assert!((left - right).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_state_is_eigenvector() {
        let p = params(0.2, 0.0);
        let psi = WaveFunction::plane_wave(100, 0.0);
        let h = apply_hamiltonian(&p, &psi, 1.3).unwrap();
        for (hv, a) in h.iter().zip(psi.amplitudes()) {
            assert!((hv - a * -1.0).norm() < 1e-14);
        }
    }

    #[test]
    fn plane_waves_have_band_energy() {
        let p = params(0.2, 0.0);
        for m in [1usize, 7, 25, 50, 93] {
            let k = TAU * m as f64 / 100.0;
            let psi = WaveFunction::plane_wave(100, k);
            let h = apply_hamiltonian(&p, &psi, 0.0).unwrap();
            let e = -k.cos();
            for (hv, a) in h.iter().zip(psi.amplitudes()) {
                assert!((hv - a * e).norm() < 1e-13, "m = {m}");
            }
        }
    }

    #[test]
    fn hamiltonian_is_hermitian() {
        let p = params(0.12, 2.0);
        for seed in 0..5 {
            let phi = random_state(100, seed);
            let psi = random_state(100, seed + 100);
            let t = 3.7 * seed as f64;
            let a = inner(phi.amplitudes(), &apply_hamiltonian(&p, &psi, t).unwrap());
            let b = inner(psi.amplitudes(), &apply_hamiltonian(&p, &phi, t).unwrap());
            assert!((a - b.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn plane_wave_is_stationary_without_field() {
        let p = params(0.2, 0.0);
        let k = TAU * 13.0 / 100.0;
        let psi = WaveFunction::plane_wave(100, k);
        let out = propagate(&p, &psi, 0.0, 2.5 * p.period()).unwrap();
        for v in spin_distribution(&out).values() {
            assert!((v - 0.01).abs() < 1e-13);
        }
    }

    #[test]
    fn propagate_rejects_reversed_interval() {
        let p = params(0.2, 2.0);
        let psi = WaveFunction::basis(100, 3).unwrap();
        assert_eq!(
            propagate(&p, &psi, 1.0, 1.0),
            Err(Error::BadTimeOrder { t0: 1.0, t1: 1.0 })
        );
        let short = WaveFunction::basis(10, 3).unwrap();
        assert!(matches!(
            propagate(&p, &short, 0.0, 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn free_hopping_matches_exact_exponential() {
        // with B0 = 0 every scheme is exact up to round-off
        let p = params(0.3, 0.0);
        let psi = random_state(100, 9);
        let t = 7.25;
        let out = propagate(&p, &psi, 0.0, t).unwrap();
        // reference: expand in plane waves by direct summation
        let n = 100;
        let mut reference = vec![Complex64::new(0.0, 0.0); n];
        for m in 0..n {
            let k = TAU * m as f64 / n as f64;
            let coef: Complex64 = (0..n)
                .map(|j| Complex64::from_polar(1.0, -k * j as f64) * psi.amplitudes()[j])
                .sum::<Complex64>()
                / n as f64;
            let phase = Complex64::from_polar(1.0, k.cos() * t);
            for (j, r) in reference.iter_mut().enumerate() {
                *r += coef * phase * Complex64::from_polar(1.0, k * j as f64);
            }
        }
        let err: f64 = out
            .amplitudes()
            .iter()
            .zip(&reference)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn kicked_evolution_is_one_kick_then_free_flight() {
        let p = SimParams::default().with_drive(Drive::Kicked).validate().unwrap();
        let prop = Propagator::new(&p);
        let psi = gaussian_packet(&p, &PacketSpec::default()).unwrap();
        let t = p.period();
        let one = prop.propagate(&psi, 0.0, t).unwrap();
        let k = p.kick_strength();
        let kicked: Vec<Complex64> = psi
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(i, a)| a * Complex64::from_polar(1.0, -k * p.potential(i + 1)))
            .collect();
        let free = SimParams::default().with_field(0.0).validate().unwrap();
        let expected = propagate(&free, &WaveFunction::from_amplitudes(kicked).unwrap(), 0.0, t).unwrap();
        assert!(one.distance(&expected) < 1e-12);
        // splitting the interval must not add or drop kicks
        let half = prop.propagate(&psi, 0.0, 0.5 * t).unwrap();
        let rest = prop.propagate(&half, 0.5 * t, t).unwrap();
        assert!(rest.distance(&one) < 1e-12);
        let back = prop.propagate_back(&one, 0.0, t).unwrap();
        assert!(back.distance(&psi) < 1e-12);
    }

    #[test]
    fn diagnostics_limits() {
        let uniform = SpinDistribution::from_values(vec![0.01; 100]).unwrap();
        let d = packet_diagnostics(&uniform);
        assert!((d.ipr - 0.01).abs() < 1e-15);

        let single = spin_distribution(&WaveFunction::basis(100, 40).unwrap());
        let d = packet_diagnostics(&single);
        assert_eq!(d.ipr, 1.0);
        assert!(d.width.abs() < 1e-6);
        assert!((d.center - 40.0).abs() < 1e-9);

        let p = params(0.2, 2.0);
        let d = packet_diagnostics(&spin_distribution(&gaussian_packet(&p, &PacketSpec::default()).unwrap()));
        assert!((d.width - 5.0 / 2f64.sqrt()).abs() < 0.1, "{}", d.width);
        assert!((d.center - 25.0).abs() < 1e-9);
    }

    #[test]
    fn center_wraps_into_ring() {
        let p = params(0.2, 2.0);
        let spec = PacketSpec { j0: 100, ..PacketSpec::default() };
        let d = packet_diagnostics(&spin_distribution(&gaussian_packet(&p, &spec).unwrap()));
        assert!(circular_distance(d.center, 100.0, 100) < 1e-9, "{}", d.center);
        assert!(d.center > 0.0 && d.center <= 100.0);
    }

    #[test]
    fn mean_displacement_wraps() {
        let dist = spin_distribution(&WaveFunction::basis(100, 98).unwrap());
        assert_eq!(mean_displacement(&dist, 3.0), -5.0);
        let two = SpinDistribution::from_values((1..=10).map(|j| if j == 2 || j == 4 { 0.5 } else { 0.0 }).collect())
            .unwrap();
        assert!((mean_displacement(&two, 1.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn basis_state_distribution() {
        let dist = spin_distribution(&WaveFunction::basis(100, 7).unwrap());
        assert_eq!(dist.at(7), 1.0);
        assert_eq!(dist.total(), 1.0);
        assert!(WaveFunction::basis(100, 0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn propagation_preserves_norm(seed in 0u64..1000, t in 0.1f64..80.0) {
            let p = params(0.12, 2.0);
            let psi = random_state(100, seed);
            let out = propagate(&p, &psi, 0.0, t).unwrap();
            prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
            prop_assert!((spin_distribution(&out).total() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn translation_covariance_without_field(shift in -60isize..60, k0 in -3.0f64..3.0) {
            let p = params(0.2, 0.0);
            let spec = PacketSpec::new(30, k0);
            let psi = gaussian_packet(&p, &spec).unwrap();
            let a = propagate(&p, &psi, 0.0, 15.0).unwrap();
            let b = propagate(&p, &psi.translated(shift), 0.0, 15.0).unwrap();
            let pa = spin_distribution(&a.translated(shift));
            let pb = spin_distribution(&b);
            for (x, y) in pa.values().iter().zip(pb.values()) {
                prop_assert!((x - y).abs() < 1e-13);
            }
        }
    }
}
