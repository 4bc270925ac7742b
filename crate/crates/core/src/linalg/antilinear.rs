use serde::{Deserialize, Serialize};

use super::{
    c, complex_power, conj, conj_vec, ensure_dim, ensure_square, hermitian_eig, inverse, ComplexMatrix,
    ComplexVector, SpectralDecomposition,
};
use crate::error::{Error, Result};

/// Antilinear map `ψ ↦ M conj(ψ)` stored by its matrix `M`.
///
/// Composition rules follow from `conj(M conj(ψ)) = conj(M) ψ`:
/// `T_N ∘ T_M` is the linear map `N conj(M)`, `T_M ∘ L` is antilinear with
/// matrix `M conj(L)`, and `L ∘ T_M` is antilinear with matrix `L M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntilinearMap {
    #[serde(with = "crate::fixture::matrix_serde")]
    pub matrix: ComplexMatrix,
}

impl AntilinearMap {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        ensure_square(&matrix)?;
        Ok(Self { matrix })
    }

    /// Plain complex conjugation in the computational basis.
    pub fn conjugation(dim: usize) -> Self {
        Self { matrix: ComplexMatrix::identity(dim, dim) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, psi: &ComplexVector) -> ComplexVector {
        &self.matrix * conj_vec(psi)
    }

    /// `self ∘ other`, a linear map.
    pub fn compose(&self, other: &AntilinearMap) -> ComplexMatrix {
        &self.matrix * conj(&other.matrix)
    }

    /// `self ∘ l` for a linear `l`.
    pub fn after_linear(&self, l: &ComplexMatrix) -> AntilinearMap {
        AntilinearMap { matrix: &self.matrix * conj(l) }
    }

    /// `l ∘ self` for a linear `l`.
    pub fn before_linear(&self, l: &ComplexMatrix) -> AntilinearMap {
        AntilinearMap { matrix: l * &self.matrix }
    }

    /// Antilinear adjoint, defined by `⟨T*φ, ψ⟩ = ⟨Tψ, φ⟩`; its matrix is `Mᵀ`.
    pub fn adjoint(&self) -> AntilinearMap {
        AntilinearMap { matrix: self.matrix.transpose() }
    }
}

/// Polar factors of an invertible antilinear map `S = J Δ^{1/2}`.
#[derive(Debug, Clone)]
pub struct AntilinearPolar {
    pub j: AntilinearMap,
    pub delta: ComplexMatrix,
    pub spectrum: SpectralDecomposition,
}

/// Polar decomposition of an antilinear map.
///
/// `Δ = S*S` has matrix `Mᵀ conj(M)`, and `J = S Δ^{-1/2}` has matrix
/// `M conj(Δ^{-1/2})`.
pub fn polar_antilinear(s: &AntilinearMap) -> Result<AntilinearPolar> {
    let m = &s.matrix;
    ensure_dim(m.nrows(), m.ncols())?;
    inverse(m)?;
    let delta = s.adjoint().compose(s);
    let delta = (&delta + delta.adjoint()).scale(0.5);
    let spectrum = hermitian_eig(&delta)?;
    if spectrum.min_eigenvalue() <= 0.0 {
        return Err(Error::NonPositiveEigenvalue { eigenvalue: spectrum.min_eigenvalue() });
    }
    let inv_sqrt = complex_power(&spectrum, c(-0.5, 0.0))?;
    let j = s.after_linear(&inv_sqrt);
    Ok(AntilinearPolar { j, delta, spectrum })
}
