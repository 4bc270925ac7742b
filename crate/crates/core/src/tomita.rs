//! Tomita operator and modular data of a cyclic-separating vector.
//!
//! With `B` the matrix of columns `aᵢΩ` over an orthonormal basis of `A` and
//! `B*` the matrix of columns `aᵢ*Ω`, the antilinear map `S(aΩ) = a*Ω` has
//! matrix `M = B* conj(B)⁻¹`. Its polar decomposition gives `J` and `Δ`.

use serde::{Deserialize, Serialize};

use crate::algebra::{is_cyclic, is_separating, orbit_matrix, OperatorSubspace};
use crate::error::{Error, Result};
use crate::linalg::{
    c, complex_power, condition_number, conj, ensure_dim, frobenius, identity, inner, inverse, kron, op_norm,
    polar_antilinear, unvectorize, AntilinearMap, ComplexMatrix, ComplexVector, SpectralDecomposition, ZERO,
};

/// Construction refuses orbit matrices with condition number above this.
pub const MAX_ORBIT_CONDITION: f64 = 1e6;

/// Modular data `(Ω, S, J, Δ)` of an algebra and a cyclic-separating vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModularTriple {
    #[serde(with = "crate::fixture::vector_serde")]
    pub omega: ComplexVector,
    pub s: AntilinearMap,
    pub j: AntilinearMap,
    #[serde(with = "crate::fixture::matrix_serde")]
    pub delta: ComplexMatrix,
    pub delta_spec: SpectralDecomposition,
    /// Ratio of the extreme eigenvalues of `Δ`.
    pub kappa: f64,
}

impl ModularTriple {
    pub fn dim(&self) -> usize {
        self.omega.len()
    }

    /// `Δ^z`.
    pub fn delta_power(&self, z: crate::linalg::Complex64) -> Result<ComplexMatrix> {
        complex_power(&self.delta_spec, z)
    }

    /// The scale `base · κ^{1/2} · d` used by every residual check.
    pub fn tolerance(&self, base: f64) -> f64 {
        base * self.kappa.sqrt() * self.dim() as f64
    }
}

/// Residuals of every modular identity; all should vanish.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ModularResiduals {
    /// `‖SΩ − Ω‖`.
    pub s_fixes_omega: f64,
    pub j_fixes_omega: f64,
    pub delta_fixes_omega: f64,
    /// `‖S − JΔ^{1/2}‖`.
    pub polar_s: f64,
    /// `‖S* − JΔ^{-1/2}‖`.
    pub polar_s_adjoint: f64,
    /// `‖JΔJ − Δ⁻¹‖`, relative to `‖Δ⁻¹‖`.
    pub j_delta_j: f64,
    pub j_involution: f64,
    pub s_involution: f64,
    /// Largest `‖S(aΩ) − a*Ω‖` over a basis of `A`.
    pub s_on_algebra: f64,
    /// Largest `‖S*(a′Ω) − a′*Ω‖` over a basis of `A′`.
    pub s_adjoint_on_commutant: f64,
}

impl ModularResiduals {
    pub fn max(&self) -> f64 {
        [
            self.s_fixes_omega,
            self.j_fixes_omega,
            self.delta_fixes_omega,
            self.polar_s,
            self.polar_s_adjoint,
            self.j_delta_j,
            self.j_involution,
            self.s_involution,
            self.s_on_algebra,
            self.s_adjoint_on_commutant,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Antilinear map `aΩ ↦ a*Ω` on `H = AΩ`.
pub fn tomita_operator(a: &OperatorSubspace, omega: &ComplexVector) -> Result<AntilinearMap> {
    ensure_dim(a.dim_space, omega.len())?;
    let (cyclic, report) = is_cyclic(a, omega);
    if !cyclic {
        return Err(Error::NotCyclic(report));
    }
    let (separating, report) = is_separating(a, omega);
    if !separating {
        return Err(Error::NotSeparating(report));
    }
    let b = orbit_matrix(a, omega);
    let kappa = condition_number(&b);
    if kappa > MAX_ORBIT_CONDITION {
        return Err(Error::IllConditioned { kappa, limit: MAX_ORBIT_CONDITION });
    }
    let mut b_star = ComplexMatrix::from_element(a.dim_space, a.dim(), ZERO);
    for (k, x) in a.basis.iter().enumerate() {
        b_star.set_column(k, &(x.adjoint() * omega));
    }
    let m = b_star * inverse(&conj(&b))?;
    AntilinearMap::new(m)
}

/// Tomita operator and its polar decomposition.
pub fn modular_data(a: &OperatorSubspace, omega: &ComplexVector) -> Result<ModularTriple> {
    let s = tomita_operator(a, omega)?;
    let polar = polar_antilinear(&s)?;
    let kappa = polar.spectrum.condition_number();
    Ok(ModularTriple {
        omega: omega.clone(),
        s,
        j: polar.j,
        delta: polar.delta,
        delta_spec: polar.spectrum,
        kappa,
    })
}

/// Evaluates every modular identity against `A` and `A′`.
pub fn modular_residuals(
    m: &ModularTriple,
    a: &OperatorSubspace,
    a_prime: &OperatorSubspace,
) -> Result<ModularResiduals> {
    let d = m.dim();
    let omega = &m.omega;
    let sqrt = m.delta_power(c(0.5, 0.0))?;
    let inv_sqrt = m.delta_power(c(-0.5, 0.0))?;
    let delta_inv = m.delta_power(c(-1.0, 0.0))?;
    let id = identity(d);
    let s_adj = m.s.adjoint();

    let s_on = |s: &AntilinearMap, space: &OperatorSubspace| {
        space
            .basis
            .iter()
            .map(|x| (s.apply(&(x * omega)) - x.adjoint() * omega).norm())
            .fold(0.0, f64::max)
    };

    let jdj = m.j.compose(&m.j.before_linear(&m.delta));
    Ok(ModularResiduals {
        s_fixes_omega: (m.s.apply(omega) - omega).norm(),
        j_fixes_omega: (m.j.apply(omega) - omega).norm(),
        delta_fixes_omega: (&m.delta * omega - omega).norm(),
        polar_s: frobenius(&(m.j.after_linear(&sqrt).matrix - &m.s.matrix)) / op_norm(&m.s.matrix),
        polar_s_adjoint: frobenius(&(m.j.after_linear(&inv_sqrt).matrix - &s_adj.matrix)) / op_norm(&s_adj.matrix),
        j_delta_j: frobenius(&(jdj - &delta_inv)) / op_norm(&delta_inv),
        j_involution: frobenius(&(m.j.compose(&m.j) - &id)),
        s_involution: frobenius(&(m.s.compose(&m.s) - &id)) / op_norm(&m.s.matrix).powi(2),
        s_on_algebra: s_on(&m.s, a),
        s_adjoint_on_commutant: s_on(&s_adj, a_prime),
    })
}

/// `Δ` for `A = Mₙ ⊗ 1ₙ` from the reduced densities alone: with `C` the
/// `n×n` coefficient matrix of `Ω` (row-major), `ρ = CC†`, `ρ′ = Cᵀ conj(C)`
/// and `Δ = ρ ⊗ ρ′⁻¹`. No Tomita operator is formed.
pub fn standard_form_delta(omega: &ComplexVector, n: usize) -> Result<ComplexMatrix> {
    ensure_dim(n * n, omega.len())?;
    let coef = unvectorize(omega, n);
    let rho = &coef * coef.adjoint();
    let rho_prime = coef.transpose() * conj(&coef);
    Ok(kron(&rho, &inverse(&rho_prime)?))
}

/// Largest mismatch when pairing the eigenvalues of `Δ` with the reciprocals
/// of its eigenvalues (both sorted), relative to each eigenvalue.
pub fn spectral_symmetry_residual(m: &ModularTriple) -> f64 {
    let ev = &m.delta_spec.eigenvalues;
    let mut recip: Vec<f64> = ev.iter().map(|l| 1.0 / l).collect();
    recip.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev.iter().zip(&recip).map(|(a, b)| (a - b).abs() / a.max(*b)).fold(0.0, f64::max)
}

/// Largest `|⟨Jψ, Jφ⟩ − ⟨φ, ψ⟩|` relative to `‖ψ‖‖φ‖` over the given pairs.
pub fn antiunitarity_residual(j: &AntilinearMap, pairs: &[(ComplexVector, ComplexVector)]) -> f64 {
    pairs
        .iter()
        .map(|(psi, phi)| {
            let lhs = inner(&j.apply(psi), &j.apply(phi));
            let rhs = inner(phi, psi);
            (lhs - rhs).norm() / (psi.norm() * phi.norm())
        })
        .fold(0.0, f64::max)
}
