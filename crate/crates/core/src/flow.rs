//! Modular flow `Δ^{-it} x Δ^{it}` and its continuation `Δ^{-z} a Δ^{z}`.

use serde::{Deserialize, Serialize};

use crate::algebra::OperatorSubspace;
use crate::error::{Error, Result};
use crate::linalg::{c, commutator, ensure_dim, ensure_square, op_norm, ComplexMatrix, Complex64};
use crate::tomita::ModularTriple;

/// Largest `|Re z|` accepted by [`analytic_flow`]. With `κ ≤ 10⁴` the
/// conjugating factors stay below `10⁴⁸`.
pub const RE_Z_GUARD: f64 = 12.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSample {
    pub z: Complex64,
    pub value: ComplexMatrix,
    /// Operator norm of `value`.
    pub norm: f64,
    pub membership_residual: f64,
}

/// `Δ^{-it} x Δ^{it}`.
pub fn modular_flow(m: &ModularTriple, x: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    conjugate(m, x, c(0.0, t))
}

fn conjugate(m: &ModularTriple, x: &ComplexMatrix, z: Complex64) -> Result<ComplexMatrix> {
    ensure_square(x)?;
    ensure_dim(m.dim(), x.nrows())?;
    let left = m.delta_power(-z)?;
    let right = m.delta_power(z)?;
    Ok(left * x * right)
}

/// `F_a(z) = Δ^{-z} a Δ^{z}` with its norm and membership residual in `A`.
pub fn analytic_flow(m: &ModularTriple, algebra: &OperatorSubspace, a: &ComplexMatrix, z: Complex64) -> Result<FlowSample> {
    if z.re.abs() > RE_Z_GUARD {
        return Err(Error::OverflowGuard { re: z.re, limit: RE_Z_GUARD });
    }
    let value = conjugate(m, a, z)?;
    let norm = op_norm(&value);
    let membership_residual = membership_residual(&value, algebra);
    Ok(FlowSample { z, value, norm, membership_residual })
}

/// `‖x − P_A(x)‖ / max(‖x‖, ε)` with the trace-orthogonal projection `P_A`.
pub fn membership_residual(x: &ComplexMatrix, algebra: &OperatorSubspace) -> f64 {
    algebra.residual(x)
}

/// Scale of the floating-point error in `Δ^{-z} a Δ^{z}`: `κ^{|Re z|}`.
pub fn conjugation_scale(m: &ModularTriple, z: Complex64) -> f64 {
    m.kappa.powf(z.re.abs())
}

/// `‖[F_a(z), b′]‖ / (κ^{|Re z|} ‖a‖ ‖b′‖)`.
pub fn relative_commutator(m: &ModularTriple, a: &ComplexMatrix, b_prime: &ComplexMatrix, z: Complex64) -> Result<f64> {
    let f = conjugate(m, a, z)?;
    let scale = conjugation_scale(m, z) * op_norm(a) * op_norm(b_prime);
    Ok(op_norm(&commutator(&f, b_prime)) / scale.max(f64::MIN_POSITIVE))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomitaCheckRow {
    pub t: f64,
    pub membership_residual: f64,
    /// Largest `‖[Δ^{-it}aΔ^{it}, b′]‖ / (‖a‖‖b′‖)` over the commutant basis.
    pub max_commutator: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Checks that `Δ^{-it} a Δ^{it}` stays in `A` and commutes with `A′` for
/// every sampled `t`. Failures are reported in the rows.
pub fn tomita_check(
    m: &ModularTriple,
    algebra: &OperatorSubspace,
    commutant: &OperatorSubspace,
    a: &ComplexMatrix,
    ts: &[f64],
    tol_base: f64,
) -> Result<Vec<TomitaCheckRow>> {
    let tolerance = m.tolerance(tol_base);
    let a_norm = op_norm(a);
    ts.iter()
        .map(|&t| {
            let g = modular_flow(m, a, t)?;
            let membership_residual = membership_residual(&g, algebra);
            let max_commutator = commutant
                .basis
                .iter()
                .map(|b| op_norm(&commutator(&g, b)) / (a_norm * op_norm(b)).max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max);
            let pass = membership_residual <= tolerance && max_commutator <= tolerance;
            Ok(TomitaCheckRow { t, membership_residual, max_commutator, tolerance, pass })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripRow {
    pub re: f64,
    pub im: f64,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StripScan {
    pub rows: Vec<StripRow>,
    /// Per real part: `(re, max |‖F(z)‖ − ‖F(re)‖| / ‖F(re)‖)` over the sampled imaginary parts.
    pub line_variation: Vec<(f64, f64)>,
}

/// Samples `‖F_a(z)‖` on vertical lines `Re z = re` for each `re`.
pub fn strip_growth_scan(m: &ModularTriple, a: &ComplexMatrix, re_values: &[f64], im_values: &[f64]) -> Result<StripScan> {
    let mut rows = Vec::new();
    let mut line_variation = Vec::new();
    for &re in re_values {
        if re.abs() > RE_Z_GUARD {
            return Err(Error::OverflowGuard { re, limit: RE_Z_GUARD });
        }
        let base = op_norm(&conjugate(m, a, c(re, 0.0))?);
        let mut worst: f64 = 0.0;
        for &im in im_values {
            let norm = op_norm(&conjugate(m, a, c(re, im))?);
            worst = worst.max((norm - base).abs() / base.max(f64::MIN_POSITIVE));
            rows.push(StripRow { re, im, norm });
        }
        line_variation.push((re, worst));
    }
    Ok(StripScan { rows, line_variation })
}
