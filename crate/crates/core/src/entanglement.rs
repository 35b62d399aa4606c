//! Pairwise concurrence of sites in a one-down-spin state.
//!
//! Two routes are provided: the general two-qubit spin-flip formula applied
//! to the reduced density matrix, and the closed form `2 |a_i| |a_j|` valid in
//! the one-excitation sector. Time series use the closed form; the test
//! suite checks it against the general formula.

use std::fmt;
use std::sync::LazyLock;

use nalgebra::{Matrix4, SymmetricEigen, DMatrix};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::{PacketSpec, ValidatedParams};
use crate::quantum::{gaussian_packet, Propagator, WaveFunction};

/// Nearest-neighbour pairs tracked by default; (100, 1) closes the ring.
pub const DEFAULT_PAIRS: [(usize, usize); 4] = [(25, 26), (50, 51), (75, 76), (100, 1)];
pub const DEFAULT_SAMPLES_PER_PERIOD: usize = 20;

const DENSITY_TOLERANCE: f64 = 1e-12;

/// Reduced state of two sites in the basis {uu, ud, du, dd}; the first factor
/// is site i, "d" marks the flipped spin.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSiteDensity {
    rho: Matrix4<Complex64>,
}

impl TwoSiteDensity {
    pub fn new(rho: Matrix4<Complex64>) -> Result<Self> {
        let d = Self { rho };
        d.check()?;
        Ok(d)
    }

    /// Pure two-qubit state from amplitudes in the basis {uu, ud, du, dd}.
    pub fn pure(amps: [Complex64; 4]) -> Result<Self> {
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        let rho = Matrix4::from_fn(|r, c| amps[r] * amps[c].conj() / norm);
        Self::new(rho)
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.rho
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let hermitian = (self.rho + self.rho.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(hermitian);
        let mut v = [0.0; 4];
        v.copy_from_slice(eig.eigenvalues.as_slice());
        v.sort_by(f64::total_cmp);
        v
    }

    fn check(&self) -> Result<()> {
        let asym = (self.rho - self.rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if asym > DENSITY_TOLERANCE {
            return Err(Error::NotADensityMatrix(format!("not Hermitian (deviation {asym:e})")));
        }
        let trace = self.rho.trace();
        if (trace - Complex64::new(1.0, 0.0)).norm() > DENSITY_TOLERANCE {
            return Err(Error::NotADensityMatrix(format!("trace {trace} != 1")));
        }
        let lowest = self.eigenvalues()[0];
        if lowest < -DENSITY_TOLERANCE {
            return Err(Error::NotADensityMatrix(format!("negative eigenvalue {lowest:e}")));
        }
        Ok(())
    }
}

fn check_pair(n: usize, i: usize, j: usize) -> Result<()> {
    for index in [i, j] {
        if index < 1 || index > n {
            return Err(Error::IndexOutOfRange { index, n });
        }
    }
    if i == j {
        return Err(Error::SameSite(i));
    }
    Ok(())
}

/// Reduced density matrix of sites (i, j), 1-based, of a one-down-spin state.
pub fn reduce_two_site(psi: &WaveFunction, i: usize, j: usize) -> Result<TwoSiteDensity> {
    check_pair(psi.len(), i, j)?;
    let ai = psi.amplitude(i);
    let aj = psi.amplitude(j);
    let total = psi.norm_sqr();
    let both_up = total - ai.norm_sqr() - aj.norm_sqr();
    let zero = Complex64::new(0.0, 0.0);
    let mut rho = Matrix4::from_element(zero);
    rho[(0, 0)] = Complex64::new(both_up.max(0.0), 0.0);
    rho[(1, 1)] = Complex64::new(aj.norm_sqr(), 0.0);
    rho[(2, 2)] = Complex64::new(ai.norm_sqr(), 0.0);
    rho[(2, 1)] = ai * aj.conj();
    rho[(1, 2)] = aj * ai.conj();
    rho /= Complex64::new(total, 0.0);
    TwoSiteDensity::new(rho)
}

/// sigma_y (x) sigma_y in the {uu, ud, du, dd} basis.
fn spin_flip() -> Matrix4<Complex64> {
    let mut m = Matrix4::from_element(Complex64::new(0.0, 0.0));
    m[(0, 3)] = Complex64::new(-1.0, 0.0);
    m[(3, 0)] = Complex64::new(-1.0, 0.0);
    m[(1, 2)] = Complex64::new(1.0, 0.0);
    m[(2, 1)] = Complex64::new(1.0, 0.0);
    m
}

/// Square roots of the eigenvalues of rho (sy x sy) rho* (sy x sy), descending.
///
/// Computed as the singular values of tau = V^dag (sy x sy) V*, where the
/// columns of V are the subnormalized eigenvectors sqrt(mu_k) e_k of rho.
/// Eigenvalues of rho below round-off are treated as exact zeros, which
/// keeps spurious sqrt(1e-17) terms out of the result.
pub fn spin_flip_spectrum(rho: &TwoSiteDensity) -> [f64; 4] {
    let hermitian = (rho.rho + rho.rho.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(hermitian);
    let scale = eig.eigenvalues.iter().copied().fold(0.0, f64::max).max(1.0);
    let cutoff = 1e-14 * scale;
    let kept: Vec<usize> = (0..4).filter(|&k| eig.eigenvalues[k] > cutoff).collect();
    let mut lambdas = [0.0; 4];
    if kept.is_empty() {
        return lambdas;
    }
    let vectors = DMatrix::from_fn(4, kept.len(), |r, c| {
        let k = kept[c];
        eig.eigenvectors[(r, k)] * eig.eigenvalues[k].sqrt()
    });
    let flip = DMatrix::from_fn(4, 4, |r, c| spin_flip()[(r, c)]);
    let tau = vectors.adjoint() * flip * vectors.map(|z| z.conj());
    let singular = tau.singular_values();
    for (dst, &s) in lambdas.iter_mut().zip(singular.iter()) {
        *dst = s;
    }
    lambdas.sort_by(|a, b| b.total_cmp(a));
    lambdas
}

/// C = max(0, l1 - l2 - l3 - l4) from the spin-flipped density matrix.
pub fn concurrence_wootters(rho: &TwoSiteDensity) -> Result<f64> {
    rho.check()?;
    let l = spin_flip_spectrum(rho);
    Ok((l[0] - l[1] - l[2] - l[3]).max(0.0))
}

/// C = 2 |a_i| |a_j|, valid for one-down-spin states.
pub fn concurrence_one_excitation(psi: &WaveFunction, i: usize, j: usize) -> Result<f64> {
    check_pair(psi.len(), i, j)?;
    Ok(2.0 * psi.amplitude(i).norm() * psi.amplitude(j).norm())
}

/// A way of computing C_{i,j} from a one-down-spin state.
pub trait ConcurrenceEstimator: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    fn concurrence(&self, psi: &WaveFunction, i: usize, j: usize) -> Result<f64>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SpinFlip;

impl ConcurrenceEstimator for SpinFlip {
    fn name(&self) -> &'static str {
        "spin-flip"
    }

    fn concurrence(&self, psi: &WaveFunction, i: usize, j: usize) -> Result<f64> {
        concurrence_wootters(&reduce_two_site(psi, i, j)?)
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct OneExcitation;

impl ConcurrenceEstimator for OneExcitation {
    fn name(&self) -> &'static str {
        "one-excitation"
    }

    fn concurrence(&self, psi: &WaveFunction, i: usize, j: usize) -> Result<f64> {
        concurrence_one_excitation(psi, i, j)
    }
}

#[derive(Debug, Default)]
pub struct EstimatorRegistry {
    entries: Vec<Box<dyn ConcurrenceEstimator>>,
}

impl EstimatorRegistry {
    pub fn builtin() -> Self {
        let mut r = Self::default();
        r.register(Box::new(OneExcitation));
        r.register(Box::new(SpinFlip));
        r
    }

    pub fn register(&mut self, estimator: Box<dyn ConcurrenceEstimator>) {
        self.entries.retain(|e| e.name() != estimator.name());
        self.entries.push(estimator);
    }

    pub fn get(&self, name: &str) -> Option<&dyn ConcurrenceEstimator> {
        self.entries.iter().find(|e| e.name() == name).map(|e| e.as_ref())
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.iter().map(|e| e.name())
    }
}

static ESTIMATORS: LazyLock<EstimatorRegistry> = LazyLock::new(EstimatorRegistry::builtin);

pub fn builtin_estimators() -> &'static EstimatorRegistry {
    &ESTIMATORS
}

pub fn lookup_estimator(name: &str) -> Result<&'static dyn ConcurrenceEstimator> {
    ESTIMATORS
        .get(name)
        .ok_or_else(|| Error::UnknownEstimator(name.to_string()))
}

pub const DEFAULT_ESTIMATOR: &str = "one-excitation";

#[derive(Debug, Clone, PartialEq)]
pub struct ConcurrenceSeries {
    pub pairs: Vec<(usize, usize)>,
    pub times: Vec<f64>,
    /// values[n][k] is C for pairs[k] at times[n].
    pub values: Vec<Vec<f64>>,
}

impl ConcurrenceSeries {
    pub fn column(&self, pair: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[pair]).collect()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().flatten().copied().fold(0.0, f64::max)
    }
}

/// Samples C for each pair at `samples_per_period` evenly spaced times per
/// period, from t = 0 through t = n_periods T.
pub fn concurrence_series(
    params: &ValidatedParams,
    packet: &PacketSpec,
    pairs: &[(usize, usize)],
    n_periods: usize,
    samples_per_period: usize,
    estimator: &dyn ConcurrenceEstimator,
) -> Result<ConcurrenceSeries> {
    let n = params.sites();
    for &(i, j) in pairs {
        check_pair(n, i, j)?;
    }
    let substeps = params.quantum_substeps();
    if samples_per_period == 0 || substeps % samples_per_period != 0 {
        return Err(Error::StrideMismatch {
            samples: samples_per_period,
            substeps,
        });
    }
    let prop = Propagator::new(params);
    let mut psi = gaussian_packet(params, packet)?;
    let dt = params.period() / samples_per_period as f64;
    let total = n_periods * samples_per_period;
    let mut times = Vec::with_capacity(total + 1);
    let mut values = Vec::with_capacity(total + 1);
    for k in 0..=total {
        let t = k as f64 * dt;
        if k > 0 {
            psi = prop.propagate(&psi, (k - 1) as f64 * dt, t)?;
        }
        let row = pairs
            .iter()
            .map(|&(i, j)| estimator.concurrence(&psi, i, j))
            .collect::<Result<Vec<_>>>()?;
        times.push(t);
        values.push(row);
    }
    Ok(ConcurrenceSeries {
        pairs: pairs.to_vec(),
        times,
        values,
    })
}
