use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("drive frequency must be positive, got omega = {0}")]
    NonPositiveOmega(f64),
    #[error("site count must be even and at least 4, got N = {0}")]
    BadSiteCount(usize),
    #[error("substeps per period must be at least 1")]
    ZeroSubsteps,
    #[error("exchange coupling J must be nonzero")]
    ZeroCoupling,
    #[error("parameter `{name}` must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("unknown splitting scheme `{0}`")]
    UnknownScheme(String),
    #[error("invalid packet: {0}")]
    InvalidPacket(String),

    #[error("the kicked drive has no pointwise value; it acts only as impulses at t = nT")]
    KickedDriveNotSampleable,
    #[error("integration step must be positive, got dt = {0}")]
    NonPositiveStep(f64),
    #[error("need at least {min} iterations, got {got}")]
    TooFewIterations { min: usize, got: usize },
    #[error("invalid scan range ({lo}, {hi}): must lie within (-pi, pi] with lo < hi")]
    BadScanRange { lo: f64, hi: f64 },
    #[error("no interior rotation-number extremum in the scanned range")]
    NotFound,
    #[error("need at least one sample")]
    NoSamples,

    #[error("end time {t1} does not follow start time {t0}")]
    BadTimeOrder { t0: f64, t1: f64 },
    #[error("state has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("state is not normalized: norm^2 = {0}")]
    NotNormalized(f64),

    #[error("matrix is not unitary: max |U^dag U - I| = {0:e}")]
    NotUnitary(f64),
    #[error("eigendecomposition did not converge (residual {0:e})")]
    NoConvergence(f64),
    #[error("smoothing width must be positive, got sigma = {0}")]
    NonPositiveSigma(f64),
    #[error("spectrum has no peaks above the prominence threshold")]
    NoPeaks,

    #[error("concurrence needs two distinct sites, got ({0}, {0})")]
    SameSite(usize),
    #[error("site index {index} outside 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("not a density matrix: {0}")]
    NotADensityMatrix(String),
    #[error("unknown concurrence estimator `{0}`")]
    UnknownEstimator(String),
    #[error("samples per period ({samples}) must divide the quantum substeps ({substeps})")]
    StrideMismatch { samples: usize, substeps: usize },
}
