//! Tidy operators: elements of `A` whose vectors `aΩ` lie in a bounded
//! spectral window of `Δ`, together with their ladders `a_n`, `a′_n`
//! defined by `a_nΩ = a′_nΩ = Δⁿ aΩ`.
//!
//! Every operator here is produced by solving `xΩ = v` inside `A` or `A′`,
//! which is possible and unique because `Ω` is cyclic and separating.

use std::f64::consts::PI;

use nalgebra::linalg::LU;
use nalgebra::Dyn;
use serde::{Deserialize, Serialize};

use crate::algebra::{commutant, commutant_of, orbit_matrix, OperatorSubspace};
use crate::error::{Error, Result};
use crate::linalg::{
    c, condition_number, ensure_dim, numerical_rank, op_norm, ComplexMatrix, ComplexVector, Complex64,
    SpectralDecomposition, ONE, ZERO,
};
use crate::tomita::{ModularTriple, MAX_ORBIT_CONDITION};

/// Largest `|n|` for ladder operators.
pub const MAX_POWER: i32 = 8;
/// Largest `|n|` for [`TidyEngine::powers_check`].
pub const MAX_POWERS_CHECK: i32 = 6;
/// Eigenvalues this close to a window edge get the weight `Θ(0) = 1/2`.
pub const BOUNDARY_EPS: f64 = 1e-12;
/// Floating-point allowance when comparing a measured norm with a bound.
pub const BOUND_SLACK: f64 = 1e-10;
/// Smallest admissible `|z| − Re z` for the resolvent bound.
pub const MIN_AXIS_GAP: f64 = 1e-6;

/// Heaviside step with `Θ(0) = 1/2`; `|x| ≤ eps` counts as zero.
pub fn heaviside(x: f64, eps: f64) -> f64 {
    if x > eps {
        1.0
    } else if x < -eps {
        0.0
    } else {
        0.5
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::InvalidWindow { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    /// `Θ(hi − λ) Θ(λ − lo)`.
    pub fn weight(&self, lambda: f64) -> f64 {
        let eps = BOUNDARY_EPS * self.hi.max(1.0);
        heaviside(self.hi - lambda, eps) * heaviside(lambda - self.lo, eps)
    }

    pub fn contains(&self, lambda: f64) -> bool {
        self.weight(lambda) > 0.0
    }
}

/// `Θ(λ₂ − Δ) Θ(Δ − λ₁)` as a matrix.
pub fn spectral_window(m: &ModularTriple, lo: f64, hi: f64) -> Result<ComplexMatrix> {
    let w = Window::new(lo, hi)?;
    crate::linalg::matrix_function(&m.delta_spec, |x| c(w.weight(x), 0.0))
}

/// Windows covering the spectrum of `Δ`, split at the widest gaps between
/// eigenvalues. Edges sit at gap midpoints; the outer edges at `λ_min/2`
/// and `2λ_max`. Gaps narrower than `min_gap` are never split.
pub fn covering_windows(spec: &SpectralDecomposition, max_windows: usize, min_gap: f64) -> Vec<Window> {
    let ev = &spec.eigenvalues;
    let mut gaps: Vec<(f64, f64)> = ev
        .windows(2)
        .filter(|w| w[1] - w[0] >= min_gap)
        .map(|w| (w[1] - w[0], 0.5 * (w[0] + w[1])))
        .collect();
    gaps.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut cuts: Vec<f64> = gaps.iter().take(max_windows.saturating_sub(1)).map(|g| g.1).collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut edges = vec![spec.min_eigenvalue() / 2.0];
    edges.extend(cuts);
    edges.push(spec.max_eigenvalue() * 2.0);
    edges.windows(2).map(|e| Window { lo: e[0], hi: e[1] }).collect()
}

/// Solves `xΩ = v` for `x` in an operator subspace on which `Ω` is cyclic
/// and separating.
#[derive(Debug, Clone)]
pub struct VectorSolver {
    basis: Vec<ComplexMatrix>,
    lu: LU<Complex64, Dyn, Dyn>,
    pub orbit_condition: f64,
}

impl VectorSolver {
    pub fn new(space: &OperatorSubspace, omega: &ComplexVector) -> Result<Self> {
        ensure_dim(space.dim_space, omega.len())?;
        let b = orbit_matrix(space, omega);
        if b.nrows() != b.ncols() {
            return Err(Error::NotSquare { rows: b.nrows(), cols: b.ncols() });
        }
        let orbit_condition = condition_number(&b);
        if orbit_condition > MAX_ORBIT_CONDITION {
            return Err(Error::IllConditioned { kappa: orbit_condition, limit: MAX_ORBIT_CONDITION });
        }
        Ok(Self { basis: space.basis.clone(), lu: b.lu(), orbit_condition })
    }

    pub fn solve(&self, v: &ComplexVector) -> Result<ComplexMatrix> {
        let coef = self.lu.solve(v).ok_or(Error::Singular)?;
        let d = v.len();
        let mut x = ComplexMatrix::zeros(d, d);
        for (b, k) in self.basis.iter().zip(coef.iter()) {
            x += b * *k;
        }
        Ok(x)
    }
}

/// Unique `a ∈ span(A)` with `aΩ = v`.
pub fn operator_from_vector(v: &ComplexVector, space: &OperatorSubspace, omega: &ComplexVector) -> Result<ComplexMatrix> {
    VectorSolver::new(space, omega)?.solve(v)
}

/// `(‖a′‖/2π)·(2λ(λ²+4π²)^{n/2} / √(2((λ²+4π²)^{1/2} − λ)) + (2π)^{n+1}π/√(4π))`.
pub fn tidy_bound(lambda: f64, n: u32, norm_source: f64) -> f64 {
    let r = (lambda * lambda + 4.0 * PI * PI).sqrt();
    let n = n as f64;
    let half_lines = 2.0 * lambda * r.powf(n) / (2.0 * (r - lambda)).sqrt();
    let half_circle = (2.0 * PI).powf(n + 1.0) * PI / (4.0 * PI).sqrt();
    norm_source / (2.0 * PI) * (half_lines + half_circle)
}

/// Bound for the commutant-side construction with `Δ ↔ Δ⁻¹`, valid for `n ≤ 0`.
pub fn mirrored_tidy_bound(lambda: f64, n: i32, norm_source: f64) -> f64 {
    debug_assert!(n <= 0);
    tidy_bound(1.0 / lambda, (-n) as u32, norm_source)
}

/// Written-out form of the commutant-side bound, kept separate from
/// [`mirrored_tidy_bound`] so the two can be compared.
pub fn mirrored_tidy_bound_explicit(lambda: f64, n: i32, norm_source: f64) -> f64 {
    let li = 1.0 / lambda;
    let r = (li * li + 4.0 * PI * PI).sqrt();
    let n = n as f64;
    let first = 2.0 * li * (li * li + 4.0 * PI * PI).powf(-n / 2.0) / (2.0 * (r - li)).sqrt();
    let second = (2.0 * PI).powf(-n + 1.0) * PI / (4.0 * PI).sqrt();
    norm_source / (2.0 * PI) * (first + second)
}

/// Closed-form bound on `‖a_n‖` (family `A`) for a tidy operator built from
/// window `[λ₁, λ₂]`, given `‖a₀‖` and `‖a′₀‖`.
///
/// `n ≥ 0`: `a_nΩ = ΔⁿΘ(λ₂−Δ)a′₀Ω`. `n < 0`: `a_nΩ = Θ(λ₂−Δ)·[ΔⁿΘ(Δ−λ₁)a₀Ω]`,
/// the bracket coming from an element of `A′` bounded by the mirrored form.
pub fn ladder_bound(family: Family, window: Window, n: i32, norm_a0: f64, norm_a0_prime: f64) -> f64 {
    match family {
        Family::Algebra if n >= 0 => tidy_bound(window.hi, n as u32, norm_a0_prime),
        Family::Algebra => tidy_bound(window.hi, 0, 1.0) * mirrored_tidy_bound(window.lo, n, norm_a0),
        Family::Commutant if n <= 0 => mirrored_tidy_bound(window.lo, n, norm_a0),
        Family::Commutant => mirrored_tidy_bound(window.lo, 0, 1.0) * tidy_bound(window.hi, n as u32, norm_a0_prime),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Operators in `A`.
    Algebra,
    /// Operators in `A′`.
    Commutant,
}

/// A tidy operator `a_{[λ₁,λ₂],n}` and its commutant partner.
#[derive(Debug, Clone, PartialEq)]
pub struct TidyOperator {
    pub window: Window,
    pub n: i32,
    pub source: ComplexMatrix,
    pub a: ComplexMatrix,
    pub a_prime: ComplexMatrix,
    /// Common value `aΩ = a′Ω = ΔⁿΘ(λ₂−Δ)Θ(Δ−λ₁)·source·Ω`.
    pub vector: ComplexVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundAuditRow {
    pub lambda1: f64,
    pub lambda2: f64,
    pub n: i32,
    pub family: Family,
    pub measured_norm: f64,
    pub bound_value: f64,
    pub ratio: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventCheck {
    pub z: [f64; 2],
    pub measured: f64,
    pub bound: f64,
    pub ratio: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualCheck {
    pub residual: f64,
    /// Magnitude the residual is measured against.
    pub scale: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpanReport {
    pub rank: usize,
    pub dim: usize,
    pub vectors: usize,
}

impl SpanReport {
    pub fn deficit(&self) -> usize {
        self.dim - self.rank
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BicommutantReport {
    pub tidy_dim: usize,
    pub bicommutant_dim: usize,
    pub algebra_dim: usize,
    /// Largest membership residual of a tidy operator in `A`.
    pub tidy_membership: f64,
    pub mutual_residual: f64,
}

/// Linear least-squares fit of `ln y` against `x`; points with `y ≤ floor`
/// are skipped. Returns `(slope, intercept)`.
pub fn exponential_fit(points: &[(f64, f64)], floor: f64) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = points.iter().filter(|p| p.1 > floor).map(|&(x, y)| (x, y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Tidy-operator machinery for one fixture.
#[derive(Debug, Clone)]
pub struct TidyEngine<'a> {
    pub modular: &'a ModularTriple,
    pub algebra: &'a OperatorSubspace,
    pub commutant: &'a OperatorSubspace,
    in_algebra: VectorSolver,
    in_commutant: VectorSolver,
}

impl<'a> TidyEngine<'a> {
    pub fn new(modular: &'a ModularTriple, algebra: &'a OperatorSubspace, commutant: &'a OperatorSubspace) -> Result<Self> {
        let in_algebra = VectorSolver::new(algebra, &modular.omega)?;
        let in_commutant = VectorSolver::new(commutant, &modular.omega)?;
        Ok(Self { modular, algebra, commutant, in_algebra, in_commutant })
    }

    fn omega(&self) -> &ComplexVector {
        &self.modular.omega
    }

    fn spec(&self) -> &SpectralDecomposition {
        &self.modular.delta_spec
    }

    pub fn solve(&self, family: Family, v: &ComplexVector) -> Result<ComplexMatrix> {
        match family {
            Family::Algebra => self.in_algebra.solve(v),
            Family::Commutant => self.in_commutant.solve(v),
        }
    }

    /// `Δⁿ v` through the eigendecomposition.
    pub fn delta_pow_vec(&self, n: i32, v: &ComplexVector) -> ComplexVector {
        self.spec().apply_fn(v, |x| c(x.powi(n), 0.0))
    }

    fn check_power(n: i32, limit: i32) -> Result<()> {
        if n.abs() > limit {
            return Err(Error::PowerOutOfRange { n, limit });
        }
        Ok(())
    }

    /// Two-sided tidy construction: `a, a′` with
    /// `aΩ = a′Ω = ΔⁿΘ(λ₂−Δ)Θ(Δ−λ₁)·source·Ω`.
    pub fn make_tidy(&self, source: &ComplexMatrix, lo: f64, hi: f64, n: i32) -> Result<TidyOperator> {
        let window = Window::new(lo, hi)?;
        Self::check_power(n, MAX_POWER)?;
        let base = source * self.omega();
        let vector = self.spec().apply_fn(&base, |x| c(window.weight(x) * x.powi(n), 0.0));
        let a = self.solve(Family::Algebra, &vector)?;
        let a_prime = self.solve(Family::Commutant, &vector)?;
        Ok(TidyOperator { window, n, source: source.clone(), a, a_prime, vector })
    }

    /// One-sided construction from a commutant source: `a ∈ A` with
    /// `aΩ = ΔⁿΘ(λ − Δ)a′Ω`.
    pub fn one_sided(&self, source_prime: &ComplexMatrix, lambda: f64, n: u32) -> Result<ComplexMatrix> {
        if lambda <= 0.0 {
            return Err(Error::NonPositiveThreshold { lambda });
        }
        Self::check_power(n as i32, MAX_POWER)?;
        let eps = BOUNDARY_EPS * lambda.max(1.0);
        let v = self.spec().apply_fn(&(source_prime * self.omega()), |x| c(heaviside(lambda - x, eps) * x.powi(n as i32), 0.0));
        self.solve(Family::Algebra, &v)
    }

    /// Mirrored one-sided construction from an algebra source: `a′ ∈ A′`
    /// with `a′Ω = ΔⁿΘ(Δ − λ)aΩ`, `n ≤ 0`.
    pub fn one_sided_mirrored(&self, source: &ComplexMatrix, lambda: f64, n: i32) -> Result<ComplexMatrix> {
        if lambda <= 0.0 {
            return Err(Error::NonPositiveThreshold { lambda });
        }
        Self::check_power(n, MAX_POWER)?;
        let eps = BOUNDARY_EPS * lambda.max(1.0);
        let v = self.spec().apply_fn(&(source * self.omega()), |x| c(heaviside(x - lambda, eps) * x.powi(n), 0.0));
        self.solve(Family::Commutant, &v)
    }

    /// Ladder operator `a_n` (or `a′_n`) of a tidy `a`: `a_nΩ = Δⁿ aΩ`.
    pub fn ladder(&self, tidy: &TidyOperator, family: Family, n: i32) -> Result<ComplexMatrix> {
        Self::check_power(n, MAX_POWER)?;
        self.solve(family, &self.delta_pow_vec(n, &tidy.vector))
    }

    /// `a ∈ A` with `aΩ = (z − Δ)⁻¹ a′Ω`, and the check
    /// `‖a‖ ≤ ‖a′‖ / √(2(|z| − Re z))`.
    pub fn resolvent_transfer(&self, a_prime: &ComplexMatrix, z: Complex64) -> Result<(ComplexMatrix, ResolventCheck)> {
        self.resolvent_generic(a_prime, z, Family::Algebra, false)
    }

    /// Commutant-side version: `a′ ∈ A′` with `a′Ω = (z − Δ⁻¹)⁻¹ aΩ` for `a ∈ A`.
    pub fn resolvent_transfer_mirrored(&self, a: &ComplexMatrix, z: Complex64) -> Result<(ComplexMatrix, ResolventCheck)> {
        self.resolvent_generic(a, z, Family::Commutant, true)
    }

    /// Literal reading with the source taken in `A` and the solution in `A`.
    /// Not a theorem; used for auditing only.
    pub fn resolvent_transfer_same_side(&self, source: &ComplexMatrix, z: Complex64) -> Result<(ComplexMatrix, ResolventCheck)> {
        self.resolvent_generic(source, z, Family::Algebra, false)
    }

    fn resolvent_generic(
        &self,
        source: &ComplexMatrix,
        z: Complex64,
        target: Family,
        inverted: bool,
    ) -> Result<(ComplexMatrix, ResolventCheck)> {
        let gap = z.norm() - z.re;
        if gap <= MIN_AXIS_GAP {
            return Err(Error::NearPositiveAxis { re: z.re, im: z.im, gap });
        }
        let eig = |x: f64| if inverted { 1.0 / x } else { x };
        let distance = self.spec().eigenvalues.iter().map(|&x| (z - eig(x)).norm()).fold(f64::INFINITY, f64::min);
        if distance <= 1e-12 {
            return Err(Error::InSpectrum { distance });
        }
        let v = self.spec().apply_fn(&(source * self.omega()), |x| ONE / (z - eig(x)));
        let a = self.solve(target, &v)?;
        let measured = op_norm(&a);
        let bound = op_norm(source) / (2.0 * gap).sqrt();
        let check = ResolventCheck {
            z: [z.re, z.im],
            measured,
            bound,
            ratio: measured / bound,
            pass: measured <= bound * (1.0 + BOUND_SLACK),
        };
        Ok((a, check))
    }

    /// Measured `‖a_n‖`, `‖a′_n‖` for `n = −N..=N` against the closed-form
    /// bounds. Rows are emitted whether or not they pass.
    pub fn growth_audit(&self, source: &ComplexMatrix, window: Window, max_n: i32) -> Result<Vec<BoundAuditRow>> {
        Self::check_power(max_n, MAX_POWER)?;
        let tidy = self.make_tidy(source, window.lo, window.hi, 0)?;
        let norm_a0 = op_norm(&tidy.a);
        let norm_a0_prime = op_norm(&tidy.a_prime);
        let mut rows = Vec::new();
        for family in [Family::Algebra, Family::Commutant] {
            for n in -max_n..=max_n {
                let measured_norm = op_norm(&self.ladder(&tidy, family, n)?);
                let bound_value = ladder_bound(family, window, n, norm_a0, norm_a0_prime);
                let ratio = if bound_value > 0.0 { measured_norm / bound_value } else { 0.0 };
                rows.push(BoundAuditRow {
                    lambda1: window.lo,
                    lambda2: window.hi,
                    n,
                    family,
                    measured_norm,
                    bound_value,
                    ratio,
                    pass: measured_norm <= bound_value * (1.0 + BOUND_SLACK),
                });
            }
        }
        Ok(rows)
    }

    /// `‖(a′_{n+1})*Ω − (a_n)*Ω‖`.
    ///
    /// The residual is compared with `tol·κ^{1/2}·d` times the larger of the
    /// two vector norms and `‖aΩ‖`.
    pub fn dagger_ladder_check(&self, tidy: &TidyOperator, n: i32, tol_base: f64) -> Result<ResidualCheck> {
        Self::check_power(n.abs() + 1, MAX_POWER)?;
        let a_n = self.ladder(tidy, Family::Algebra, n)?;
        let a_prime_next = self.ladder(tidy, Family::Commutant, n + 1)?;
        let lhs = a_prime_next.adjoint() * self.omega();
        let rhs = a_n.adjoint() * self.omega();
        let residual = (&lhs - &rhs).norm();
        let scale = lhs.norm().max(rhs.norm()).max(tidy.vector.norm());
        let tolerance = self.modular.tolerance(tol_base) * scale;
        Ok(ResidualCheck { residual, scale, tolerance, pass: residual <= tolerance })
    }

    /// `‖Δⁿ a Δ⁻ⁿ bΩ − a_n bΩ‖` for tidy `a`, `b`.
    ///
    /// Left side by matrix powers, right side by the ladder solve. The
    /// residual is compared with `tol·κ^{1/2}·d` times the magnitude of the
    /// evaluation chain `‖Δⁿ‖·‖a‖·‖Δ⁻ⁿbΩ‖`.
    pub fn powers_check(&self, a: &TidyOperator, b: &TidyOperator, n: i32, tol_base: f64) -> Result<ResidualCheck> {
        Self::check_power(n, MAX_POWERS_CHECK)?;
        let b_omega = &b.a * self.omega();
        let inner = self.delta_pow_vec(-n, &b_omega);
        let lhs = self.delta_pow_vec(n, &(&a.a * &inner));
        let a_n = self.ladder(a, Family::Algebra, n)?;
        let rhs = &a_n * &b_omega;
        let residual = (&lhs - &rhs).norm();
        let spec = self.spec();
        let delta_n_norm = spec.max_eigenvalue().powi(n).max(spec.min_eigenvalue().powi(n));
        let scale = delta_n_norm * op_norm(&a.a) * inner.norm();
        let tolerance = self.modular.tolerance(tol_base) * scale;
        Ok(ResidualCheck { residual, scale, tolerance, pass: residual <= tolerance })
    }

    /// Rank of `{Θ_w bᵢΩ}` over the algebra basis and the given windows.
    pub fn tidy_span_check(&self, windows: &[Window]) -> SpanReport {
        let d = self.modular.dim();
        let mut vectors = Vec::new();
        for w in windows {
            for b in &self.algebra.basis {
                vectors.push(self.spec().apply_fn(&(b * self.omega()), |x| c(w.weight(x), 0.0)));
            }
        }
        let mut m = ComplexMatrix::from_element(d, vectors.len().max(1), ZERO);
        for (k, v) in vectors.iter().enumerate() {
            m.set_column(k, v);
        }
        SpanReport { rank: numerical_rank(&m), dim: d, vectors: vectors.len() }
    }

    /// Tidy operators `a_{[w],0}` built from every algebra basis element and
    /// every window.
    pub fn tidy_set(&self, windows: &[Window]) -> Result<Vec<ComplexMatrix>> {
        let mut out = Vec::new();
        for w in windows {
            for b in &self.algebra.basis {
                out.push(self.make_tidy(b, w.lo, w.hi, 0)?.a);
            }
        }
        Ok(out)
    }

    /// Bicommutant of the tidy set compared with `A`.
    pub fn tidy_bicommutant_check(&self, windows: &[Window]) -> Result<BicommutantReport> {
        let tidy = self.tidy_set(windows)?;
        let tidy_membership = tidy.iter().map(|t| self.algebra.residual(t)).fold(0.0, f64::max);
        let span = crate::linalg::subspace_orthonormalize(self.modular.dim(), &tidy)?;
        let bc = commutant(&commutant_of(span.dim_space, &span.basis));
        Ok(BicommutantReport {
            tidy_dim: span.dim(),
            bicommutant_dim: bc.dim(),
            algebra_dim: self.algebra.dim(),
            tidy_membership,
            mutual_residual: bc.mutual_residual(self.algebra),
        })
    }
}
