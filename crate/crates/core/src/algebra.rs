//! Finite-dimensional von Neumann algebras represented as operator subspaces.
//!
//! An algebra is stored as an orthonormal basis (trace inner product) of a
//! unital `*`-closed subspace of `M_d`. Commutants are nullspaces of the
//! stacked commutator map `x ↦ ([b₁, x], [b₂, x], …)` on the `d²`-dimensional
//! operator space.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use crate::linalg::OperatorSubspace;
use crate::error::{Error, RankReport, Result};
use crate::linalg::{
    ensure_dim, ensure_square, identity, kron, singular_values, unvectorize, ComplexMatrix, ComplexVector,
    Complex64, RANK_TOL, ZERO,
};

/// Smallest unital `*`-algebra containing `generators`.
///
/// Each round adds adjoints of the newly found basis elements and their
/// products (both orders) with every basis element, re-orthonormalizing as it
/// goes, until a round adds nothing.
pub fn close_to_algebra(dim: usize, generators: &[ComplexMatrix]) -> Result<OperatorSubspace> {
    let mut space = OperatorSubspace::zero(dim);
    space.push(&identity(dim));
    for g in generators {
        ensure_square(g)?;
        ensure_dim(dim, g.nrows())?;
        space.push(g);
        space.push(&g.adjoint());
    }
    let cap = dim * dim;
    let mut frontier_start = 0;
    for _round in 0..=cap {
        let frontier_end = space.dim();
        if frontier_start == frontier_end {
            return Ok(space);
        }
        for k in frontier_start..frontier_end {
            let x = space.basis[k].clone();
            space.push(&x.adjoint());
            for m in 0..frontier_end {
                let y = space.basis[m].clone();
                space.push(&(&x * &y));
                space.push(&(&y * &x));
            }
        }
        frontier_start = frontier_end;
        if space.dim() > cap {
            break;
        }
    }
    Err(Error::ClosureDidNotConverge { rounds: cap + 1, dim: space.dim() })
}

/// Orthonormal basis of the commutant of a set of operators.
pub fn commutant(a: &OperatorSubspace) -> OperatorSubspace {
    commutant_of(a.dim_space, &a.basis)
}

/// Commutant of an arbitrary list of `d×d` matrices.
pub fn commutant_of(dim: usize, mats: &[ComplexMatrix]) -> OperatorSubspace {
    let n = dim * dim;
    let id = identity(dim);
    let rows = (mats.len() * n).max(n);
    let mut stacked = DMatrix::<Complex64>::zeros(rows, n);
    for (k, b) in mats.iter().enumerate() {
        // Row-major vec: vec(bx) = (b ⊗ 1) vec(x), vec(xb) = (1 ⊗ bᵀ) vec(x).
        let block = kron(b, &id) - kron(&id, &b.transpose());
        stacked.view_mut((k * n, 0), (n, n)).copy_from(&block);
    }
    let reduced = if rows > n { stacked.qr().r() } else { stacked };
    nullspace(&reduced, dim)
}

fn nullspace(m: &ComplexMatrix, dim: usize) -> OperatorSubspace {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let mut space = OperatorSubspace::zero(dim);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if sigma_max == 0.0 || s <= RANK_TOL * sigma_max {
            let v = ComplexVector::from_fn(n, |k, _| v_t[(i, k)].conj());
            space.push(&unvectorize(&v, dim));
        }
    }
    space
}

/// Commutant applied twice.
pub fn bicommutant(a: &OperatorSubspace) -> OperatorSubspace {
    commutant(&commutant(a))
}

/// Rank report for the map `a ↦ aΩ` on the subspace.
pub fn orbit_rank(a: &OperatorSubspace, omega: &ComplexVector) -> RankReport {
    let d = a.dim_space;
    let m = orbit_matrix(a, omega);
    let s = singular_values(&m);
    let largest = s.first().copied().unwrap_or(0.0);
    let rank = if largest > 0.0 { s.iter().filter(|&&v| v > RANK_TOL * largest).count() } else { 0 };
    RankReport {
        dim: d,
        subspace_dim: a.dim(),
        rank,
        largest_singular_value: largest,
        smallest_singular_value: s.last().copied().unwrap_or(0.0),
    }
}

/// The `d × dim(A)` matrix with columns `bᵢΩ`.
pub fn orbit_matrix(a: &OperatorSubspace, omega: &ComplexVector) -> ComplexMatrix {
    let d = a.dim_space;
    let mut m = ComplexMatrix::from_element(d, a.dim(), ZERO);
    for (k, b) in a.basis.iter().enumerate() {
        m.set_column(k, &(b * omega));
    }
    m
}

/// `AΩ` spans the Hilbert space.
pub fn is_cyclic(a: &OperatorSubspace, omega: &ComplexVector) -> (bool, RankReport) {
    let report = orbit_rank(a, omega);
    (report.rank == report.dim, report)
}

/// `aΩ = 0` with `a ∈ A` forces `a = 0`.
pub fn is_separating(a: &OperatorSubspace, omega: &ComplexVector) -> (bool, RankReport) {
    let report = orbit_rank(a, omega);
    (report.rank == report.subspace_dim, report)
}

/// Representation model for a finite-dimensional von Neumann algebra.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlgebraModel {
    /// `M_n ⊗ 1_n` on `Cⁿ ⊗ Cⁿ`.
    StandardFactor { n: usize },
    /// `⊕ₖ M_{nₖ} ⊗ 1_{mₖ}`; blocks are `(nₖ, mₖ)`.
    DirectSum { blocks: Vec<(usize, usize)> },
    /// Diagonal matrices on `C^d`.
    MaximalAbelian { d: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgebraSpec {
    pub model: AlgebraModel,
    pub seed: u64,
}

impl AlgebraModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            AlgebraModel::StandardFactor { n } if *n == 0 => Err(Error::InvalidModel("factor size 0".into())),
            AlgebraModel::MaximalAbelian { d } if *d == 0 => Err(Error::InvalidModel("dimension 0".into())),
            AlgebraModel::DirectSum { blocks } if blocks.is_empty() || blocks.iter().any(|&(n, m)| n == 0 || m == 0) => {
                Err(Error::InvalidModel(format!("bad blocks {blocks:?}")))
            }
            _ => Ok(()),
        }
    }

    /// Representation dimension `d`.
    pub fn dim(&self) -> usize {
        match self {
            AlgebraModel::StandardFactor { n } => n * n,
            AlgebraModel::DirectSum { blocks } => blocks.iter().map(|(n, m)| n * m).sum(),
            AlgebraModel::MaximalAbelian { d } => *d,
        }
    }

    /// Blocks `(n, m)` with offsets; every model is a direct sum of
    /// `M_n ⊗ 1_m` blocks.
    pub fn blocks(&self) -> Vec<(usize, usize)> {
        match self {
            AlgebraModel::StandardFactor { n } => vec![(*n, *n)],
            AlgebraModel::DirectSum { blocks } => blocks.clone(),
            AlgebraModel::MaximalAbelian { d } => vec![(1, 1); *d],
        }
    }

    /// Short label used in reports, e.g. `standard_factor(2)`.
    pub fn label(&self) -> String {
        match self {
            AlgebraModel::StandardFactor { n } => format!("standard_factor({n})"),
            AlgebraModel::DirectSum { blocks } => {
                let parts: Vec<String> = blocks.iter().map(|(n, m)| format!("{n}x{m}")).collect();
                format!("direct_sum({})", parts.join(","))
            }
            AlgebraModel::MaximalAbelian { d } => format!("maximal_abelian({d})"),
        }
    }

    /// Generators `E_ij ⊗ 1_m` embedded block by block.
    pub fn generators(&self) -> Vec<ComplexMatrix> {
        self.embedded(|n, m, i, j| kron(&crate::linalg::elementary(n, i, j), &identity(m)))
    }

    /// Generators `1_n ⊗ E_ij` of the commutant, embedded block by block.
    pub fn commutant_generators(&self) -> Vec<ComplexMatrix> {
        let blocks = self.blocks();
        let d = self.dim();
        let mut out = Vec::new();
        let mut offset = 0;
        for &(n, m) in &blocks {
            for i in 0..m {
                for j in 0..m {
                    let local = kron(&identity(n), &crate::linalg::elementary(m, i, j));
                    let mut full = ComplexMatrix::zeros(d, d);
                    full.view_mut((offset, offset), (n * m, n * m)).copy_from(&local);
                    out.push(full);
                }
            }
            offset += n * m;
        }
        out
    }

    fn embedded(&self, local: impl Fn(usize, usize, usize, usize) -> ComplexMatrix) -> Vec<ComplexMatrix> {
        let d = self.dim();
        let mut out = Vec::new();
        let mut offset = 0;
        for (n, m) in self.blocks() {
            for i in 0..n {
                for j in 0..n {
                    let mut full = ComplexMatrix::zeros(d, d);
                    full.view_mut((offset, offset), (n * m, n * m)).copy_from(&local(n, m, i, j));
                    out.push(full);
                }
            }
            offset += n * m;
        }
        out
    }

    /// Orthonormal basis of the algebra.
    pub fn algebra(&self) -> OperatorSubspace {
        let mut space = OperatorSubspace::zero(self.dim());
        for g in self.generators() {
            space.push(&g);
        }
        space
    }
}
