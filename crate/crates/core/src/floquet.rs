//! Floquet analysis of the one-period propagator.
//!
//! Convention: `U phi_m = exp(-i eps_m) phi_m` with eps_m in (-pi, pi], so that
//! in the field-free limit eps = J cos(k) T (mod 2 pi). Quasienergies are
//! kept as dimensionless phases.

use std::f64::consts::{PI, TAU};

use nalgebra::{linalg::Schur, DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::params::ValidatedParams;
use crate::quantum::{Propagator, WaveFunction, NORM_TOLERANCE};

/// Bound on max |U^dag U - I| and on Floquet eigen-residuals.
pub const UNITARITY_TOLERANCE: f64 = 1e-8;
/// Local-spectrum entries at or below this weight are dropped from the filtered view.
pub const WEIGHT_THRESHOLD: f64 = 1e-3;
pub const DEFAULT_SIGMA: f64 = 0.05;
pub const DEFAULT_GRID_POINTS: usize = 4096;
/// Minimum peak prominence as a fraction of the global maximum of S.
pub const DEFAULT_PROMINENCE: f64 = 0.1;

/// Reduces an angle into (-pi, pi].
pub fn wrap_phase(x: f64) -> f64 {
    let r = (x + PI).rem_euclid(TAU) - PI;
    if r <= -PI {
        PI
    } else {
        r
    }
}

/// One-period propagator; column j is the evolved basis state |j+1>.
#[derive(Debug, Clone, PartialEq)]
pub struct MonodromyOperator {
    matrix: DMatrix<Complex64>,
}

impl MonodromyOperator {
    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// max |U^dag U - I|.
    pub fn unitarity_residual(&self) -> f64 {
        let gram = self.matrix.adjoint() * &self.matrix;
        max_deviation_from_identity(&gram)
    }

    pub fn apply(&self, psi: &WaveFunction) -> Result<WaveFunction> {
        if psi.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: psi.len(),
            });
        }
        let v = DVector::from_column_slice(psi.amplitudes());
        let out = &self.matrix * v;
        Ok(WaveFunction::normalized(out.iter().copied().collect()).expect("unitary image"))
    }
}

fn max_deviation_from_identity(m: &DMatrix<Complex64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((m[(i, j)] - target).norm());
        }
    }
    worst
}

/// Builds U(T) by evolving every basis state over one period from t = 0.
pub fn monodromy(params: &ValidatedParams) -> Result<MonodromyOperator> {
    let n = params.sites();
    let prop = Propagator::new(params);
    let period = params.period();
    let chunk = n.div_ceil(rayon::current_num_threads().max(1)).max(1);
    let columns: Vec<Vec<Complex64>> = (0..n)
        .collect::<Vec<_>>()
        .par_chunks(chunk)
        .flat_map_iter(|sites| {
            let mut states: Vec<Vec<Complex64>> = sites
                .iter()
                .map(|&j| {
                    let mut v = vec![Complex64::new(0.0, 0.0); n];
                    v[j] = Complex64::new(1.0, 0.0);
                    v
                })
                .collect();
            prop.evolve_batch(&mut states, 0.0, period);
            states
        })
        .collect();
    let mut matrix = DMatrix::zeros(n, n);
    for (j, col) in columns.iter().enumerate() {
        for (i, &a) in col.iter().enumerate() {
            matrix[(i, j)] = a;
        }
    }
    Ok(MonodromyOperator { matrix })
}

#[derive(Debug, Clone)]
pub struct FloquetDecomposition {
    /// Eigenphases in ascending order, each in (-pi, pi].
    eigenphases: Vec<f64>,
    /// Column m is the Floquet mode for `eigenphases[m]`.
    modes: DMatrix<Complex64>,
    residual: f64,
}

impl FloquetDecomposition {
    pub fn eigenphases(&self) -> &[f64] {
        &self.eigenphases
    }

    pub fn modes(&self) -> &DMatrix<Complex64> {
        &self.modes
    }

    pub fn mode(&self, m: usize) -> WaveFunction {
        WaveFunction::normalized(self.modes.column(m).iter().copied().collect()).expect("unit mode")
    }

    pub fn len(&self) -> usize {
        self.eigenphases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenphases.is_empty()
    }

    /// max_m |U phi_m - exp(-i eps_m) phi_m| measured at construction.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// max |Phi^dag Phi - I| over the mode set.
    pub fn orthonormality_error(&self) -> f64 {
        max_deviation_from_identity(&(self.modes.adjoint() * &self.modes))
    }
}

/// Complete eigendecomposition of a unitary matrix.
///
/// A complex Schur factorization `U = Q T Q^dag` of a normal matrix has a
/// diagonal `T`, so the unitary `Q` supplies an orthonormal eigenbasis, also
/// inside degenerate eigenspaces.
pub fn floquet_decompose(u: &MonodromyOperator) -> Result<FloquetDecomposition> {
    let unitarity = u.unitarity_residual();
    if !(unitarity <= UNITARITY_TOLERANCE) {
        return Err(Error::NotUnitary(unitarity));
    }
    let n = u.dim();
    let schur = Schur::try_new(u.matrix.clone(), 1e-15, 10_000 * n.max(1))
        .ok_or(Error::NoConvergence(f64::NAN))?;
    let (q, t) = schur.unpack();

    let mut order: Vec<(f64, usize)> = (0..n).map(|m| (wrap_phase(-t[(m, m)].arg()), m)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut modes = DMatrix::zeros(n, n);
    let mut eigenphases = Vec::with_capacity(n);
    for (dst, &(eps, src)) in order.iter().enumerate() {
        modes.set_column(dst, &q.column(src));
        eigenphases.push(eps);
    }

    let image = &u.matrix * &modes;
    let mut residual: f64 = 0.0;
    for m in 0..n {
        let lambda = Complex64::from_polar(1.0, -eigenphases[m]);
        let r = (image.column(m) - modes.column(m) * lambda).norm();
        residual = residual.max(r);
    }
    if !(residual <= UNITARITY_TOLERANCE) {
        return Err(Error::NoConvergence(residual));
    }
    Ok(FloquetDecomposition {
        eigenphases,
        modes,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralLine {
    pub quasienergy: f64,
    pub weight: f64,
}

/// Overlap weights |<phi_m|psi0>|^2 of an initial state on the Floquet modes.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSpectrum {
    lines: Vec<SpectralLine>,
}

impl LocalSpectrum {
    pub fn from_lines(mut lines: Vec<SpectralLine>) -> Self {
        lines.sort_by(|a, b| a.quasienergy.total_cmp(&b.quasienergy));
        Self { lines }
    }

    pub fn lines(&self) -> &[SpectralLine] {
        &self.lines
    }

    pub fn total_weight(&self) -> f64 {
        self.lines.iter().map(|l| l.weight).sum()
    }

    /// Entries with weight strictly above `threshold`.
    pub fn filtered(&self, threshold: f64) -> Vec<SpectralLine> {
        self.lines.iter().copied().filter(|l| l.weight > threshold).collect()
    }

    /// Merges lines whose quasienergies lie within `tolerance` of the previous
    /// line in the same cluster. Weights inside a degenerate eigenspace depend
    /// on the basis chosen there, their sum does not.
    pub fn aggregated(&self, tolerance: f64) -> LocalSpectrum {
        let mut out: Vec<(f64, f64, f64)> = Vec::new(); // (weighted phase sum, weight, last phase)
        for line in &self.lines {
            match out.last_mut() {
                Some(cluster) if line.quasienergy - cluster.2 <= tolerance => {
                    cluster.0 += line.quasienergy * line.weight;
                    cluster.1 += line.weight;
                    cluster.2 = line.quasienergy;
                }
                _ => out.push((line.quasienergy * line.weight, line.weight, line.quasienergy)),
            }
        }
        let lines = out
            .into_iter()
            .map(|(sum, w, last)| SpectralLine {
                quasienergy: if w > 0.0 { sum / w } else { last },
                weight: w,
            })
            .collect();
        LocalSpectrum { lines }
    }
}

pub fn local_spectrum(decomp: &FloquetDecomposition, psi0: &WaveFunction) -> Result<LocalSpectrum> {
    let n = decomp.len();
    if psi0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: psi0.len(),
        });
    }
    let norm = psi0.norm_sqr();
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::NotNormalized(norm));
    }
    let v = DVector::from_column_slice(psi0.amplitudes());
    let overlaps = decomp.modes.adjoint() * v;
    let lines = decomp
        .eigenphases
        .iter()
        .zip(overlaps.iter())
        .map(|(&quasienergy, a)| SpectralLine {
            quasienergy,
            weight: a.norm_sqr(),
        })
        .collect();
    Ok(LocalSpectrum::from_lines(lines))
}

/// Wrapped-Gaussian density of a local spectrum on a uniform grid over (-pi, pi].
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedSpectrum {
    pub sigma: f64,
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
}

impl SmoothedSpectrum {
    pub fn spacing(&self) -> f64 {
        TAU / self.grid.len() as f64
    }

    /// Rectangle-rule integral over the circle, exact for periodic smooth S up
    /// to aliasing.
    pub fn integral(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.spacing()
    }
}

/// Normalized Gaussian of width `sigma` wrapped onto the circle, at offset `d`.
pub fn wrapped_gaussian(d: f64, sigma: f64) -> f64 {
    if sigma < 1.5 {
        // image sum; images beyond 8 sigma underflow relative to the leading term
        let images = (8.0 * sigma / TAU).ceil() as i64 + 1;
        let norm = 1.0 / (sigma * TAU.sqrt());
        (-images..=images)
            .map(|k| {
                let x = d + TAU * k as f64;
                (-0.5 * x * x / (sigma * sigma)).exp()
            })
            .sum::<f64>()
            * norm
    } else {
        // Fourier series, rapidly convergent for wide kernels
        let mut total = 1.0;
        let mut n = 1.0f64;
        loop {
            let coef = (-0.5 * n * n * sigma * sigma).exp();
            if coef < 1e-18 {
                break;
            }
            total += 2.0 * coef * (n * d).cos();
            n += 1.0;
        }
        total / TAU
    }
}

pub fn smooth_spectrum(spectrum: &LocalSpectrum, sigma: f64) -> Result<SmoothedSpectrum> {
    smooth_spectrum_on_grid(spectrum, sigma, DEFAULT_GRID_POINTS)
}

pub fn smooth_spectrum_on_grid(spectrum: &LocalSpectrum, sigma: f64, points: usize) -> Result<SmoothedSpectrum> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::NonPositiveSigma(sigma));
    }
    let points = points.max(1);
    let grid: Vec<f64> = (0..points)
        .map(|i| -PI + TAU * (i + 1) as f64 / points as f64)
        .collect();
    let density = grid
        .iter()
        .map(|&e| {
            spectrum
                .lines
                .iter()
                .map(|l| l.weight * wrapped_gaussian(wrap_phase(e - l.quasienergy), sigma))
                .sum()
        })
        .collect();
    Ok(SmoothedSpectrum { sigma, grid, density })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub quasienergy: f64,
    pub height: f64,
    pub prominence: f64,
}

/// Local maxima of S on the circle whose topographic prominence is at least
/// `min_prominence` times the global maximum, sorted by quasienergy.
pub fn find_peaks(smoothed: &SmoothedSpectrum, min_prominence: f64) -> Vec<Peak> {
    let s = &smoothed.density;
    let g = s.len();
    if g < 3 {
        return Vec::new();
    }
    let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = s.iter().copied().fold(f64::INFINITY, f64::min);
    if !(max > 0.0) || max - min <= 1e-12 * max {
        return Vec::new();
    }
    let threshold = min_prominence * max;
    let mut peaks = Vec::new();
    for i in 0..g {
        let h = s[i];
        // strict on the left, non-strict on the right: one sample per plateau
        if !(h > s[(i + g - 1) % g] && h >= s[(i + 1) % g]) {
            continue;
        }
        let walk = |forward: bool| -> Option<f64> {
            let mut lowest = h;
            for step in 1..g {
                let k = if forward { (i + step) % g } else { (i + g - step) % g };
                if s[k] > h {
                    return Some(lowest);
                }
                lowest = lowest.min(s[k]);
            }
            None
        };
        let prominence = match (walk(false), walk(true)) {
            (Some(l), Some(r)) => h - l.max(r),
            (Some(v), None) | (None, Some(v)) => h - v,
            (None, None) => h - min,
        };
        if prominence >= threshold {
            peaks.push(Peak {
                quasienergy: smoothed.grid[i],
                height: h,
                prominence,
            });
        }
    }
    peaks
}

/// Circular gaps between consecutive peaks; they sum to 2 pi.
pub fn peak_spacings(smoothed: &SmoothedSpectrum, min_prominence: f64) -> Result<Vec<f64>> {
    let peaks = find_peaks(smoothed, min_prominence);
    if peaks.is_empty() {
        return Err(Error::NoPeaks);
    }
    Ok(circular_gaps(&peaks.iter().map(|p| p.quasienergy).collect::<Vec<_>>()))
}

/// Gaps between sorted positions on the circle, including the wrap-around gap.
pub fn circular_gaps(sorted: &[f64]) -> Vec<f64> {
    match sorted.len() {
        0 => Vec::new(),
        1 => vec![TAU],
        n => {
            let mut gaps: Vec<f64> = sorted.windows(2).map(|w| w[1] - w[0]).collect();
            gaps.push(sorted[0] + TAU - sorted[n - 1]);
            gaps
        }
    }
}

/// Gaps inside a ladder that does not wrap around the circle: the circular
/// gaps without the single widest one, which closes the ladder.
pub fn ladder_gaps(circular: &[f64]) -> Vec<f64> {
    if circular.len() < 2 {
        return Vec::new();
    }
    let widest = circular
        .iter()
        .enumerate()
        .fold(0, |best, (i, &g)| if g > circular[best] { i } else { best });
    circular
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != widest)
        .map(|(_, &g)| g)
        .collect()
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation over mean.
pub fn relative_std(values: &[f64]) -> f64 {
    let m = mean(values);
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64;
    var.sqrt() / m
}
