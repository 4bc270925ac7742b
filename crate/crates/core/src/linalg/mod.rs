//! Dense complex linear algebra used throughout the crate.
//!
//! Matrices are `nalgebra` dynamic matrices over `Complex<f64>`. The inner
//! product is conjugate-linear in the first slot and linear in the second,
//! `⟨φ, ψ⟩ = Σ conj(φᵢ) ψᵢ`, and the trace inner product on operators is
//! `⟨X, Y⟩ = tr(X† Y)`.

mod antilinear;
mod eig;
mod subspace;

pub use antilinear::{polar_antilinear, AntilinearMap, AntilinearPolar};
pub use eig::{complex_power, hermitian_eig, matrix_function, SpectralDecomposition};
pub use subspace::{subspace_orthonormalize, OperatorSubspace};

use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Singular values below this fraction of the largest are treated as zero.
pub const RANK_TOL: f64 = 1e-9;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

/// Elementary matrix `E_ij` (one at row `i`, column `j`).
pub fn elementary(dim: usize, i: usize, j: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(dim, dim);
    m[(i, j)] = ONE;
    m
}

pub fn diag_real(values: &[f64]) -> ComplexMatrix {
    let n = values.len();
    ComplexMatrix::from_fn(n, n, |i, j| if i == j { c(values[i], 0.0) } else { ZERO })
}

/// Kronecker product `a ⊗ b` in the row-major convention `|i⟩|j⟩ ↦ i·dim(b) + j`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn commutator(x: &ComplexMatrix, y: &ComplexMatrix) -> ComplexMatrix {
    x * y - y * x
}

/// Elementwise complex conjugate.
pub fn conj(m: &ComplexMatrix) -> ComplexMatrix {
    m.map(|z| z.conj())
}

pub fn conj_vec(v: &ComplexVector) -> ComplexVector {
    v.map(|z| z.conj())
}

/// `⟨φ, ψ⟩`, conjugate-linear in `φ`.
pub fn inner(phi: &ComplexVector, psi: &ComplexVector) -> Complex64 {
    phi.dotc(psi)
}

/// Trace inner product `tr(X† Y)`.
pub fn trace_inner(x: &ComplexMatrix, y: &ComplexMatrix) -> Complex64 {
    x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum()
}

pub fn frobenius(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest singular value.
pub fn op_norm(m: &ComplexMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

pub fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn ensure_square(m: &ComplexMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    Ok(m.nrows())
}

pub fn ensure_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Singular values sorted descending.
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.singular_values().iter().cloned().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// Number of singular values above `RANK_TOL` times the largest.
pub fn numerical_rank(m: &ComplexMatrix) -> usize {
    let s = singular_values(m);
    match s.first() {
        Some(&max) if max > 0.0 => s.iter().filter(|&&v| v > RANK_TOL * max).count(),
        _ => 0,
    }
}

/// Ratio of extreme singular values; infinite for singular input.
pub fn condition_number(m: &ComplexMatrix) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Solves `m x = b` by LU with partial pivoting.
pub fn solve(m: &ComplexMatrix, b: &ComplexVector) -> Result<ComplexVector> {
    let n = ensure_square(m)?;
    ensure_dim(n, b.len())?;
    let x = m.clone().lu().solve(b).ok_or(Error::Singular)?;
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Singular);
    }
    Ok(x)
}

pub fn inverse(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    ensure_square(m)?;
    let inv = m.clone().try_inverse().ok_or(Error::Singular)?;
    if !is_finite(&inv) {
        return Err(Error::Singular);
    }
    Ok(inv)
}

/// Row-major flattening of a matrix into a vector of length `rows·cols`.
pub fn vectorize(m: &ComplexMatrix) -> ComplexVector {
    let (r, cc) = m.shape();
    ComplexVector::from_fn(r * cc, |k, _| m[(k / cc, k % cc)])
}

pub fn unvectorize(v: &ComplexVector, dim: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, dim, |i, j| v[i * dim + j])
}

/// The Pauli matrices `σx, σy, σz`.
pub fn pauli() -> [ComplexMatrix; 3] {
    let sx = ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
    let sy = ComplexMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]);
    let sz = ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]);
    [sx, sy, sz]
}

/// Computational basis vector `|i⟩`.
pub fn basis_vector(dim: usize, i: usize) -> ComplexVector {
    let mut v = ComplexVector::zeros(dim);
    v[i] = ONE;
    v
}
