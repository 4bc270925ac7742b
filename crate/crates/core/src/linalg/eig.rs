use nalgebra::linalg::SymmetricEigen;
use serde::{Deserialize, Serialize};

use super::{ensure_square, is_finite, ComplexMatrix, ComplexVector, Complex64};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 10_000;

/// Eigendecomposition `H = U diag(λ) U†` of a Hermitian matrix with
/// eigenvalues in ascending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Unitary matrix whose columns are the eigenvectors.
    #[serde(with = "crate::fixture::matrix_serde")]
    pub eigenvectors: ComplexMatrix,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(f64::NAN)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(f64::NAN)
    }

    /// Ratio of largest to smallest eigenvalue.
    pub fn condition_number(&self) -> f64 {
        self.max_eigenvalue() / self.min_eigenvalue()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.with_weights(&self.eigenvalues.iter().map(|&l| Complex64::new(l, 0.0)).collect::<Vec<_>>())
    }

    /// `U diag(w) U†`.
    pub fn with_weights(&self, weights: &[Complex64]) -> ComplexMatrix {
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (j, w) in weights.iter().enumerate() {
            for z in scaled.column_mut(j).iter_mut() {
                *z *= *w;
            }
        }
        scaled * u.adjoint()
    }

    /// Coordinates `U† ψ` in the eigenbasis.
    pub fn coordinates(&self, psi: &ComplexVector) -> ComplexVector {
        self.eigenvectors.ad_mul(psi)
    }

    /// `f(H) ψ` without forming `f(H)`.
    pub fn apply_fn(&self, psi: &ComplexVector, f: impl Fn(f64) -> Complex64) -> ComplexVector {
        let mut coords = self.coordinates(psi);
        for (c, &l) in coords.iter_mut().zip(&self.eigenvalues) {
            *c *= f(l);
        }
        &self.eigenvectors * coords
    }
}

/// Eigendecomposition of `(H + H†)/2`.
pub fn hermitian_eig(h: &ComplexMatrix) -> Result<SpectralDecomposition> {
    let n = ensure_square(h)?;
    if !is_finite(h) {
        return Err(Error::NonFinite("hermitian_eig input"));
    }
    if n == 0 {
        return Ok(SpectralDecomposition { eigenvalues: Vec::new(), eigenvectors: h.clone() });
    }
    let sym = (h + h.adjoint()).scale(0.5);
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, MAX_SWEEPS)
        .ok_or(Error::EigenNoConvergence { max_iter: MAX_SWEEPS })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    if !is_finite(&eigenvectors) || eigenvalues.iter().any(|l| !l.is_finite()) {
        return Err(Error::NonFinite("hermitian_eig"));
    }
    Ok(SpectralDecomposition { eigenvalues, eigenvectors })
}

/// `U diag(f(λᵢ)) U†`. Fails if `f` returns a non-finite value at any eigenvalue.
pub fn matrix_function(
    dec: &SpectralDecomposition,
    f: impl Fn(f64) -> Complex64,
) -> Result<ComplexMatrix> {
    let weights = dec
        .eigenvalues
        .iter()
        .map(|&l| {
            let w = f(l);
            if w.re.is_finite() && w.im.is_finite() {
                Ok(w)
            } else {
                Err(Error::FunctionUndefined { eigenvalue: l })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(dec.with_weights(&weights))
}

/// `H^z = U diag(exp(z ln λᵢ)) U†` for positive definite `H`.
pub fn complex_power(dec: &SpectralDecomposition, z: Complex64) -> Result<ComplexMatrix> {
    if let Some(&l) = dec.eigenvalues.iter().find(|&&l| l <= 0.0) {
        return Err(Error::NonPositiveEigenvalue { eigenvalue: l });
    }
    let weights: Vec<Complex64> = dec.eigenvalues.iter().map(|&l| (z * l.ln()).exp()).collect();
    let m = dec.with_weights(&weights);
    if !is_finite(&m) {
        return Err(Error::NonFinite("complex_power"));
    }
    Ok(m)
}
