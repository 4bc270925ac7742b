use serde::{Deserialize, Serialize};

use super::{frobenius, identity, trace_inner, ComplexMatrix};
use crate::error::Result;

/// Inputs whose component orthogonal to the current span is below this
/// fraction of their norm are treated as dependent.
const DEPENDENCE_TOL: f64 = 1e-10;

/// A linear subspace of `d×d` matrices with a basis orthonormal under
/// `⟨X, Y⟩ = tr(X† Y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorSubspace {
    pub dim_space: usize,
    #[serde(with = "crate::fixture::matrix_list_serde")]
    pub basis: Vec<ComplexMatrix>,
}

impl OperatorSubspace {
    pub fn zero(dim_space: usize) -> Self {
        Self { dim_space, basis: Vec::new() }
    }

    /// Scalar multiples of the identity.
    pub fn scalars(dim_space: usize) -> Self {
        let basis = vec![identity(dim_space).unscale((dim_space as f64).sqrt())];
        Self { dim_space, basis }
    }

    /// All `d×d` matrices, spanned by the elementary matrices.
    pub fn full(dim_space: usize) -> Self {
        let basis = (0..dim_space)
            .flat_map(|i| (0..dim_space).map(move |j| super::elementary(dim_space, i, j)))
            .collect();
        Self { dim_space, basis }
    }

    /// Wraps a basis that is already orthonormal.
    pub fn from_orthonormal(dim_space: usize, basis: Vec<ComplexMatrix>) -> Self {
        Self { dim_space, basis }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Trace-orthogonal projection onto the span.
    pub fn project(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let mut p = ComplexMatrix::zeros(self.dim_space, self.dim_space);
        for b in &self.basis {
            p += b * trace_inner(b, x);
        }
        p
    }

    /// `‖x − P(x)‖ / max(‖x‖, ε)` in Frobenius norm.
    pub fn residual(&self, x: &ComplexMatrix) -> f64 {
        let norm = frobenius(x);
        frobenius(&(x - self.project(x))) / norm.max(f64::MIN_POSITIVE)
    }

    pub fn contains_identity(&self) -> bool {
        self.residual(&identity(self.dim_space)) <= 1e-10
    }

    /// Largest residual of an adjoint of a basis element.
    pub fn adjoint_closure_residual(&self) -> f64 {
        self.basis.iter().map(|b| self.residual(&b.adjoint())).fold(0.0, f64::max)
    }

    /// Largest residual of a pairwise product of basis elements.
    pub fn product_closure_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for x in &self.basis {
            for y in &self.basis {
                worst = worst.max(self.residual(&(x * y)));
            }
        }
        worst
    }

    /// Largest residual of either basis projected onto the other span.
    /// Infinite if the dimensions differ.
    pub fn mutual_residual(&self, other: &OperatorSubspace) -> f64 {
        if self.dim() != other.dim() || self.dim_space != other.dim_space {
            return f64::INFINITY;
        }
        let a = self.basis.iter().map(|b| other.residual(b)).fold(0.0, f64::max);
        let b = other.basis.iter().map(|b| self.residual(b)).fold(0.0, f64::max);
        a.max(b)
    }

    /// Appends `x` if it is independent of the current span. Returns whether
    /// the span grew.
    pub fn push(&mut self, x: &ComplexMatrix) -> bool {
        let norm = frobenius(x);
        if norm == 0.0 {
            return false;
        }
        let mut r = x.clone();
        // Two passes of modified Gram-Schmidt.
        for _ in 0..2 {
            for b in &self.basis {
                let coef = trace_inner(b, &r);
                r -= b * coef;
            }
        }
        let rn = frobenius(&r);
        if rn <= DEPENDENCE_TOL * norm {
            return false;
        }
        self.basis.push(r.unscale(rn));
        true
    }
}

/// Orthonormal basis of the span of `mats` under the trace inner product.
pub fn subspace_orthonormalize(dim_space: usize, mats: &[ComplexMatrix]) -> Result<OperatorSubspace> {
    let mut space = OperatorSubspace::zero(dim_space);
    for m in mats {
        super::ensure_square(m)?;
        super::ensure_dim(dim_space, m.nrows())?;
        space.push(m);
    }
    Ok(space)
}
