use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Numerical rank of the map `a ↦ aΩ` restricted to an operator subspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    /// Hilbert space dimension.
    pub dim: usize,
    /// Dimension of the operator subspace.
    pub subspace_dim: usize,
    /// Number of singular values above the rank threshold.
    pub rank: usize,
    pub largest_singular_value: f64,
    pub smallest_singular_value: f64,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite entry produced by {0}")]
    NonFinite(&'static str),

    #[error("Hermitian eigensolver did not converge within {max_iter} sweeps")]
    EigenNoConvergence { max_iter: usize },

    #[error("function undefined at eigenvalue {eigenvalue}")]
    FunctionUndefined { eigenvalue: f64 },

    #[error("operator has non-positive eigenvalue {eigenvalue}")]
    NonPositiveEigenvalue { eigenvalue: f64 },

    #[error("matrix is numerically singular")]
    Singular,

    #[error("vector is not cyclic: rank {} < {}", .0.rank, .0.dim)]
    NotCyclic(RankReport),

    #[error("vector is not separating: rank {} < {}", .0.rank, .0.subspace_dim)]
    NotSeparating(RankReport),

    #[error("condition number {kappa:.3e} exceeds limit {limit:.1e}")]
    IllConditioned { kappa: f64, limit: f64 },

    #[error("algebra closure did not stabilise after {rounds} rounds (dimension {dim})")]
    ClosureDidNotConverge { rounds: usize, dim: usize },

    #[error("invalid spectral window [{lo}, {hi}]")]
    InvalidWindow { lo: f64, hi: f64 },

    #[error("|Re z| = {re} exceeds overflow guard {limit}")]
    OverflowGuard { re: f64, limit: f64 },

    #[error("power {n} outside supported range ±{limit}")]
    PowerOutOfRange { n: i32, limit: i32 },

    #[error("z = {re}{im:+}i too close to the positive real axis (|z| - Re z = {gap:.3e})")]
    NearPositiveAxis { re: f64, im: f64, gap: f64 },

    #[error("z lies in the spectrum (distance {distance:.3e})")]
    InSpectrum { distance: f64 },

    #[error("sigmoid steepness must be a positive integer, got {0}")]
    InvalidSteepness(u32),

    #[error("threshold lambda = {lambda} must be positive")]
    NonPositiveThreshold { lambda: f64 },

    #[error("spectrum up to {max_eigenvalue} not enclosed by contour truncated at {truncation}")]
    SpectrumNotEnclosed { max_eigenvalue: f64, truncation: f64 },

    #[error("quadrature did not converge: {nodes} nodes, last change {last_change:.3e}")]
    QuadratureNoConvergence { nodes: usize, last_change: f64 },

    #[error("pole at {re}{im:+}i lies within {distance:.1e} of the contour")]
    PoleOnContour { re: f64, im: f64, distance: f64 },

    #[error("threshold {lambda} is within {distance:.3e} of the spectrum (need {required})")]
    ThresholdTooClose { lambda: f64, distance: f64, required: f64 },

    #[error("fixture certification failed after {attempts} attempts")]
    Certification { attempts: usize },

    #[error("invalid algebra model: {0}")]
    InvalidModel(String),

    #[error("fixture schema: {0}")]
    Schema(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
