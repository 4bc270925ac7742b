//! Contour functional calculus for `Δⁿ f_k(Δ)` with the sigmoid
//! `f_k(z) = 1/(1 + e^{k(z−λ)})`.
//!
//! The contour `γ` runs counterclockwise around the positive axis:
//! bottom line `t − ih` for `t ∈ [0, T]`, top line `t + ih` for `t` from `T`
//! back to `0`, and the left half-circle `h e^{iθ}`, `θ ∈ [π/2, 3π/2]`.
//! The closing segment at `Re z = T` is dropped; `T` is chosen so that its
//! contribution is below the quadrature tolerance.
//!
//! `f_k` has poles at `λ + iπ(2m+1)/k` with residue `−1/k`. Those with
//! `|Im| < h` are enclosed, so the integral equals
//! `Δⁿf_k(Δ)ψ + Σ_m z_mⁿ(−1/k)(z_m − Δ)⁻¹ψ`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, ensure_dim, ComplexVector, Complex64, SpectralDecomposition, I, ONE};

pub const QUAD_TOL: f64 = 1e-8;
/// Total integrand evaluations allowed per integral.
pub const NODE_CAP: usize = 1 << 20;
/// Distance below which a pole counts as lying on the contour.
pub const POLE_CLEARANCE: f64 = 1e-8;
/// Smallest admissible distance from the threshold `λ` to the spectrum.
pub const MIN_THRESHOLD_GAP: f64 = 0.05;
const MIN_LEVELS: usize = 3;

/// `1/(1 + e^{k(z−λ)})`, evaluated through `e^{−w}/(1 + e^{−w})` when
/// `Re w > 0` so large arguments do not overflow.
pub fn sigmoid(z: Complex64, k: u32, lambda: f64) -> Result<Complex64> {
    if k == 0 {
        return Err(Error::InvalidSteepness(k));
    }
    Ok(sigmoid_unchecked(z, k, lambda))
}

fn sigmoid_unchecked(z: Complex64, k: u32, lambda: f64) -> Complex64 {
    let w = (z - lambda) * k as f64;
    if w.re > 0.0 {
        let e = (-w).exp();
        e / (ONE + e)
    } else {
        ONE / (ONE + w.exp())
    }
}

/// Real sigmoid on the real axis.
pub fn sigmoid_real(x: f64, k: u32, lambda: f64) -> f64 {
    let w = k as f64 * (x - lambda);
    if w > 0.0 {
        let e = (-w).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + w.exp())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    pub half_height: f64,
    pub truncation: f64,
    /// Nodes per unit length on each half-line at the coarsest level.
    pub nodes_per_unit: usize,
    /// Nodes on the half-circle at the coarsest level.
    pub halfcircle_nodes: usize,
}

impl ContourSpec {
    pub fn new(half_height: f64, truncation: f64, nodes_per_unit: usize, halfcircle_nodes: usize) -> Result<Self> {
        if !(half_height > 0.0 && half_height.is_finite()) || !(truncation > 0.0 && truncation.is_finite()) {
            return Err(Error::InvalidModel(format!("contour half_height {half_height}, truncation {truncation}")));
        }
        if nodes_per_unit < 8 || halfcircle_nodes < 8 {
            return Err(Error::InvalidModel("contour node counts must be at least 8".into()));
        }
        Ok(Self { half_height, truncation, nodes_per_unit, halfcircle_nodes })
    }

    /// Smallest `T ≥ max(λ, λ_max) + 1` on a 0.5 grid with
    /// `e^{−k(T−λ)}(T² + h²)^{n/2} < quad_tol/100`.
    pub fn for_problem(spec: &SpectralDecomposition, n: u32, k: u32, lambda: f64, half_height: f64, quad_tol: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidSteepness(k));
        }
        let mut t = lambda.max(spec.max_eigenvalue()) + 1.0;
        let target = (quad_tol / 100.0).ln();
        while -(k as f64) * (t - lambda) + 0.5 * n as f64 * (t * t + half_height * half_height).ln() >= target {
            t += 0.5;
        }
        Self::new(half_height, t, 8, 64)
    }

    fn line_nodes(&self) -> usize {
        ((self.truncation * self.nodes_per_unit as f64).ceil() as usize).max(8)
    }

    /// Poles of `f_k` strictly inside the contour, ordered by imaginary part.
    pub fn enclosed_poles(&self, k: u32, lambda: f64) -> Result<Vec<Complex64>> {
        if k == 0 {
            return Err(Error::InvalidSteepness(k));
        }
        let mut poles = Vec::new();
        let step = PI / k as f64;
        let mut m: i64 = 0;
        loop {
            let y = step * (2 * m + 1) as f64;
            if y >= self.half_height + POLE_CLEARANCE {
                break;
            }
            for pole in [c(lambda, -y), c(lambda, y)] {
                let distance = self.distance_to_contour(pole);
                if distance < POLE_CLEARANCE {
                    return Err(Error::PoleOnContour { re: pole.re, im: pole.im, distance });
                }
                if lambda < self.truncation {
                    poles.push(pole);
                }
            }
            m += 1;
        }
        poles.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        Ok(poles)
    }

    /// Euclidean distance from `z` to the truncated contour.
    pub fn distance_to_contour(&self, z: Complex64) -> f64 {
        let h = self.half_height;
        let line = |y: f64| {
            let tx = z.re.clamp(0.0, self.truncation);
            ((z.re - tx).powi(2) + (z.im - y).powi(2)).sqrt()
        };
        let arc = if z.re <= 0.0 {
            (z.norm() - h).abs()
        } else {
            // nearest arc points are the endpoints ±ih
            (z - c(0.0, h)).norm().min((z - c(0.0, -h)).norm())
        };
        line(h).min(line(-h)).min(arc)
    }

    /// Point and derivative of segment `seg` at parameter `s ∈ [0, 1]`.
    fn point(&self, seg: usize, s: f64) -> (Complex64, Complex64) {
        let h = self.half_height;
        let t_max = self.truncation;
        match seg {
            0 => (c(t_max * s, -h), c(t_max, 0.0)),
            1 => (c(t_max * (1.0 - s), h), c(-t_max, 0.0)),
            _ => {
                let theta = PI / 2.0 + PI * s;
                let z = Complex64::from_polar(h, theta);
                (z, I * z * PI)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureLevel {
    pub nodes: usize,
    /// Plain midpoint estimate at this level.
    #[serde(with = "crate::fixture::vector_serde")]
    pub midpoint: ComplexVector,
    /// Extrapolated estimate using this and all coarser levels.
    #[serde(with = "crate::fixture::vector_serde")]
    pub extrapolated: ComplexVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    #[serde(with = "crate::fixture::vector_serde")]
    pub value: ComplexVector,
    /// Norm of the difference between the last two extrapolated estimates.
    pub estimated_error: f64,
    /// Total integrand evaluations across all levels.
    pub node_count: usize,
    /// Sum of the enclosed pole contributions.
    #[serde(with = "crate::fixture::vector_serde")]
    pub pole_correction: ComplexVector,
    /// `value − pole_correction`; equals `Δⁿf_k(Δ)ψ` up to quadrature error.
    #[serde(with = "crate::fixture::vector_serde")]
    pub corrected_value: ComplexVector,
    pub pole_count: usize,
    pub contour: ContourSpec,
    pub levels: Vec<QuadratureLevel>,
}

fn check_inputs(spec: &SpectralDecomposition, k: u32, lambda: f64, psi: &ComplexVector) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidSteepness(k));
    }
    if !(lambda > 0.0) {
        return Err(Error::NonPositiveThreshold { lambda });
    }
    ensure_dim(spec.dim(), psi.len())
}

/// `Δⁿ f_k(Δ) ψ` from the eigendecomposition.
pub fn spectral_oracle(spec: &SpectralDecomposition, n: u32, k: u32, lambda: f64, psi: &ComplexVector) -> Result<ComplexVector> {
    check_inputs(spec, k, lambda, psi)?;
    Ok(spec.apply_fn(psi, |x| c(x.powi(n as i32) * sigmoid_real(x, k, lambda), 0.0)))
}

/// `Σ_m z_mⁿ (−1/k) (z_m − Δ)⁻¹ ψ` over the poles enclosed by `contour`.
pub fn pole_sum(
    spec: &SpectralDecomposition,
    n: u32,
    k: u32,
    lambda: f64,
    psi: &ComplexVector,
    contour: &ContourSpec,
) -> Result<(ComplexVector, usize)> {
    check_inputs(spec, k, lambda, psi)?;
    let poles = contour.enclosed_poles(k, lambda)?;
    let coords = spec.coordinates(psi);
    let mut acc = ComplexVector::zeros(psi.len());
    for &p in &poles {
        let w = p.powu(n) * (-1.0 / k as f64);
        for (j, &x) in spec.eigenvalues.iter().enumerate() {
            acc[j] += w * coords[j] / (p - x);
        }
    }
    Ok((&spec.eigenvectors * acc, poles.len()))
}

/// `(1/2πi)∮_γ zⁿ f_k(z)(z − Δ)⁻¹ψ dz`.
///
/// Composite midpoint levels on each of the three segments, node counts
/// doubling per level. The half-node offset keeps the segment junctions out
/// of the node set. Levels are combined by Richardson extrapolation in `h²`;
/// iteration stops once two successive extrapolated estimates differ by
/// less than `quad_tol`.
pub fn contour_apply(
    spec: &SpectralDecomposition,
    n: u32,
    k: u32,
    lambda: f64,
    psi: &ComplexVector,
    contour: &ContourSpec,
    quad_tol: f64,
) -> Result<QuadratureResult> {
    check_inputs(spec, k, lambda, psi)?;
    if !(contour.truncation > lambda) {
        return Err(Error::InvalidModel(format!("truncation {} must exceed λ = {lambda}", contour.truncation)));
    }
    let max_eig = spec.max_eigenvalue();
    if !(max_eig < contour.truncation) {
        return Err(Error::SpectrumNotEnclosed { max_eigenvalue: max_eig, truncation: contour.truncation });
    }
    let (pole_vec, pole_count) = pole_sum(spec, n, k, lambda, psi, contour)?;
    let coords = spec.coordinates(psi);
    let d = psi.len();
    let base = [contour.line_nodes(), contour.line_nodes(), contour.halfcircle_nodes];

    let mut table: Vec<Vec<ComplexVector>> = Vec::new();
    let mut levels = Vec::new();
    let mut node_count = 0usize;
    let mut last_change = f64::INFINITY;
    for level in 0.. {
        let counts: Vec<usize> = base.iter().map(|b| b << level).collect();
        let level_nodes: usize = counts.iter().sum();
        if node_count + level_nodes > NODE_CAP {
            return Err(Error::QuadratureNoConvergence { nodes: node_count, last_change });
        }
        node_count += level_nodes;
        let mut sum = ComplexVector::zeros(d);
        for (seg, &count) in counts.iter().enumerate() {
            let step = 1.0 / count as f64;
            for i in 0..count {
                let (z, dz) = contour.point(seg, (i as f64 + 0.5) * step);
                let g = z.powu(n) * sigmoid_unchecked(z, k, lambda) * dz * step;
                for (j, &x) in spec.eigenvalues.iter().enumerate() {
                    sum[j] += g * coords[j] / (z - x);
                }
            }
        }
        sum /= c(0.0, 2.0 * PI);
        let midpoint = &spec.eigenvectors * &sum;

        let mut row = vec![sum];
        for m in 1..=level {
            let factor = 4f64.powi(m as i32);
            let prev = &table[level - 1][m - 1];
            let next = &row[m - 1] + (&row[m - 1] - prev) / c(factor - 1.0, 0.0);
            row.push(next);
        }
        let extrapolated = &spec.eigenvectors * &row[level];
        if level > 0 {
            last_change = (&row[level] - &table[level - 1][level - 1]).norm();
        }
        table.push(row);
        levels.push(QuadratureLevel { nodes: level_nodes, midpoint, extrapolated });
        if level + 1 >= MIN_LEVELS && last_change < quad_tol {
            break;
        }
    }
    let value = levels.last().unwrap().extrapolated.clone();
    let corrected_value = &value - &pole_vec;
    Ok(QuadratureResult {
        value,
        estimated_error: last_change,
        node_count,
        pole_correction: pole_vec,
        corrected_value,
        pole_count,
        contour: *contour,
        levels,
    })
}

/// One row of a convergence study; columns match `contour_convergence.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub k: u32,
    pub n: u32,
    pub lambda: f64,
    pub nodes: usize,
    /// `‖estimate − Δⁿf_k(Δ)ψ‖`.
    pub uncorrected_err: f64,
    /// `‖estimate − (Δⁿf_k(Δ)ψ + pole sum)‖`.
    pub corrected_err: f64,
    pub pole_count: usize,
    pub pole_norm: f64,
}

/// Per-level errors of the extrapolated estimates in `result`.
pub fn convergence_rows(
    result: &QuadratureResult,
    oracle: &ComplexVector,
    n: u32,
    k: u32,
    lambda: f64,
) -> Vec<ConvergenceRow> {
    let target = oracle + &result.pole_correction;
    let pole_norm = result.pole_correction.norm();
    let mut cumulative = 0;
    result
        .levels
        .iter()
        .map(|l| {
            cumulative += l.nodes;
            ConvergenceRow {
                k,
                n,
                lambda,
                nodes: cumulative,
                uncorrected_err: (&l.extrapolated - oracle).norm(),
                corrected_err: (&l.extrapolated - &target).norm(),
                pole_count: result.pole_count,
                pole_norm,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmoidLimitRow {
    pub k: u32,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmoidLimitReport {
    pub lambda: f64,
    pub gap: f64,
    pub k_max: u32,
    /// First `k` from which the errors never increase.
    pub k0: u32,
    pub rows: Vec<SigmoidLimitRow>,
    pub final_error: f64,
    pub pass: bool,
}

/// `k_max = ⌈40/gap⌉`.
pub fn k_max_for_gap(gap: f64) -> u32 {
    (40.0 / gap).ceil() as u32
}

/// Distance from `λ` to the spectrum.
pub fn threshold_gap(spec: &SpectralDecomposition, lambda: f64) -> f64 {
    spec.eigenvalues.iter().map(|&x| (x - lambda).abs()).fold(f64::INFINITY, f64::min)
}

/// `e_k = ‖Δⁿf_k(Δ)ψ − ΔⁿΘ(λ−Δ)ψ‖` for each `k` in `k_list` (sorted
/// ascending). Passes when the sequence is nonincreasing from some `k₀`
/// strictly below the last `k`, and the last error is at most `1e-6`.
/// Increases below `1e-15·‖Δⁿψ‖` count as rounding.
pub fn sigmoid_limit_check(
    spec: &SpectralDecomposition,
    n: u32,
    lambda: f64,
    psi: &ComplexVector,
    k_list: &[u32],
) -> Result<SigmoidLimitReport> {
    check_inputs(spec, 1, lambda, psi)?;
    let gap = threshold_gap(spec, lambda);
    if gap < MIN_THRESHOLD_GAP {
        return Err(Error::ThresholdTooClose { lambda, distance: gap, required: MIN_THRESHOLD_GAP });
    }
    let mut ks = k_list.to_vec();
    ks.sort_unstable();
    ks.dedup();
    if ks.first() == Some(&0) {
        return Err(Error::InvalidSteepness(0));
    }
    let coords = spec.coordinates(psi);
    let rows: Vec<SigmoidLimitRow> = ks
        .iter()
        .map(|&k| {
            let error = spec
                .eigenvalues
                .iter()
                .zip(coords.iter())
                .map(|(&x, cj)| {
                    // 1 − f_k(x) = f_k(2λ − x)
                    let diff = if x < lambda { sigmoid_real(2.0 * lambda - x, k, lambda) } else { sigmoid_real(x, k, lambda) };
                    (x.powi(n as i32) * diff).powi(2) * cj.norm_sqr()
                })
                .sum::<f64>()
                .sqrt();
            SigmoidLimitRow { k, error }
        })
        .collect();
    let scale = spec.apply_fn(psi, |x| c(x.powi(n as i32), 0.0)).norm();
    let slack = 1e-15 * scale;
    let mut start = rows.len().saturating_sub(1);
    while start > 0 && rows[start].error <= rows[start - 1].error + slack {
        start -= 1;
    }
    let k0 = rows.get(start).map_or(0, |r| r.k);
    let final_error = rows.last().map_or(f64::INFINITY, |r| r.error);
    let pass = rows.len() >= 2 && start + 1 < rows.len() && final_error <= 1e-6;
    Ok(SigmoidLimitReport { lambda, gap, k_max: k_max_for_gap(gap), k0, rows, final_error, pass })
}

/// Up to `count` thresholds at distance at least `MIN_THRESHOLD_GAP` from
/// the spectrum: midpoints of eigenvalue gaps of width at least
/// `2·MIN_THRESHOLD_GAP` (widest first), then `λ_max + 1, λ_max + 2, …`.
pub fn spectrum_avoiding_thresholds(spec: &SpectralDecomposition, count: usize) -> Vec<f64> {
    let mut gaps: Vec<(f64, f64)> = spec
        .eigenvalues
        .windows(2)
        .filter(|w| w[1] - w[0] >= 2.0 * MIN_THRESHOLD_GAP)
        .map(|w| (w[1] - w[0], 0.5 * (w[0] + w[1])))
        .collect();
    gaps.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let above = (1..).map(|j| spec.max_eigenvalue() + j as f64);
    gaps.into_iter().map(|g| g.1).chain(above).take(count).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag_real, hermitian_eig, identity};

    fn diag_spec(values: &[f64]) -> SpectralDecomposition {
        hermitian_eig(&diag_real(values)).unwrap()
    }

    fn unit(d: usize, i: usize) -> ComplexVector {
        let mut v = ComplexVector::zeros(d);
        v[i] = ONE;
        v
    }

    #[test]
    fn sigmoid_examples() {
        assert!((sigmoid(c(0.7, 0.0), 3, 0.7).unwrap() - c(0.5, 0.0)).norm() < 1e-15);
        for t in [-2.0, 0.3, 1.0, 4.0] {
            let on_line = sigmoid(c(t, 2.0 * PI), 3, 1.0).unwrap();
            let real = sigmoid_real(t, 3, 1.0);
            assert!((on_line - c(real, 0.0)).norm() < 1e-13, "{t}");
        }
        assert!((sigmoid(c(-1e3, 0.5), 2, 1.0).unwrap() - ONE).norm() < 1e-14);
        assert!(sigmoid(c(1e3, 0.5), 2, 1.0).unwrap().norm() < 1e-300);
        assert!(sigmoid(c(1e4, 0.0), 7, 1.0).unwrap().is_finite());
        assert!(matches!(sigmoid(ONE, 0, 1.0), Err(Error::InvalidSteepness(0))));
    }

    #[test]
    fn sigmoid_matches_direct_formula() {
        for &(re, im) in &[(0.3, 0.1), (-1.2, 2.0), (2.0, -0.4), (0.9, 5.0)] {
            let z = c(re, im);
            let direct = ONE / (ONE + ((z - 1.0) * 2.0).exp());
            assert!((sigmoid(z, 2, 1.0).unwrap() - direct).norm() <= 1e-14 * direct.norm().max(1.0));
        }
    }

    #[test]
    fn pole_enumeration() {
        let cs = ContourSpec::new(2.0 * PI, 10.0, 8, 64).unwrap();
        let p1 = cs.enclosed_poles(1, 1.0).unwrap();
        assert_eq!(p1.len(), 2);
        assert!((p1[1] - c(1.0, PI)).norm() < 1e-15);
        assert_eq!(cs.enclosed_poles(4, 1.0).unwrap().len(), 8);
        let small = ContourSpec::new(PI / 4.0 * 0.9, 10.0, 8, 64).unwrap();
        assert!(small.enclosed_poles(1, 1.0).unwrap().is_empty());
        let spec = diag_spec(&[0.5, 2.0]);
        let (v, count) = pole_sum(&spec, 1, 1, 1.0, &unit(2, 0), &small).unwrap();
        assert_eq!(count, 0);
        assert_eq!(v.norm(), 0.0);
        let touching = ContourSpec::new(PI, 10.0, 8, 64).unwrap();
        assert!(matches!(touching.enclosed_poles(1, 1.0), Err(Error::PoleOnContour { .. })));
    }

    #[test]
    fn oracle_examples() {
        let spec = hermitian_eig(&identity(3)).unwrap();
        let psi = ComplexVector::from_vec(vec![c(0.3, 0.1), c(-0.2, 0.0), c(0.0, 0.9)]);
        let o = spectral_oracle(&spec, 0, 30, 2.0, &psi).unwrap();
        assert!((&o - &psi.scale(sigmoid_real(1.0, 30, 2.0))).norm() < 1e-15);
        assert!((o - &psi).norm() < 1e-12);

        let spec = diag_spec(&[0.5, 2.0]);
        let e = unit(2, 1);
        let o = spectral_oracle(&spec, 1, 3, 3.0, &e).unwrap();
        assert!((o - e.scale(2.0 * sigmoid_real(2.0, 3, 3.0))).norm() < 1e-15);
    }

    #[test]
    fn oracle_is_linear() {
        let spec = diag_spec(&[0.4, 1.1, 2.5]);
        let a = ComplexVector::from_vec(vec![c(0.3, 0.1), c(-0.2, 0.0), c(0.0, 0.9)]);
        let b = ComplexVector::from_vec(vec![c(1.0, 0.0), c(0.5, -0.5), c(0.2, 0.2)]);
        let s = c(0.7, -1.3);
        let lhs = spectral_oracle(&spec, 2, 4, 1.0, &(&a + &b * s)).unwrap();
        let rhs = spectral_oracle(&spec, 2, 4, 1.0, &a).unwrap() + spectral_oracle(&spec, 2, 4, 1.0, &b).unwrap() * s;
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn residue_closure_small_cases() {
        let spec = diag_spec(&[0.3, 1.0, 2.2]);
        let psi = ComplexVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.48), c(0.64, 0.0)]);
        for n in 0..=2 {
            for k in [1, 2, 4, 8] {
                let lambda = 1.6;
                let cs = ContourSpec::for_problem(&spec, n, k, lambda, 2.0 * PI, QUAD_TOL).unwrap();
                let r = contour_apply(&spec, n, k, lambda, &psi, &cs, QUAD_TOL).unwrap();
                let oracle = spectral_oracle(&spec, n, k, lambda, &psi).unwrap();
                let err = (&r.corrected_value - &oracle).norm();
                assert!(err <= 10.0 * QUAD_TOL, "n {n} k {k}: {err}");
                assert_eq!(r.pole_count, 2 * k as usize);
                assert!(r.node_count <= NODE_CAP);
            }
        }
    }

    #[test]
    fn pole_free_contour_matches_oracle() {
        let spec = diag_spec(&[0.3, 1.0, 2.2]);
        let psi = unit(3, 1) + unit(3, 2);
        let cs = ContourSpec::for_problem(&spec, 1, 2, 1.6, PI / 4.0, QUAD_TOL).unwrap();
        let r = contour_apply(&spec, 1, 2, 1.6, &psi, &cs, QUAD_TOL).unwrap();
        assert_eq!(r.pole_count, 0);
        let oracle = spectral_oracle(&spec, 1, 2, 1.6, &psi).unwrap();
        assert!((r.value - oracle).norm() <= 10.0 * QUAD_TOL);
    }

    #[test]
    fn midpoint_levels_converge_at_second_order() {
        let spec = diag_spec(&[0.3, 1.0, 2.2]);
        let psi = ComplexVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.48), c(0.64, 0.0)]);
        let (n, k, lambda) = (1, 2, 1.6);
        let cs = ContourSpec::for_problem(&spec, n, k, lambda, 2.0 * PI, QUAD_TOL).unwrap();
        let r = contour_apply(&spec, n, k, lambda, &psi, &cs, 1e-13).unwrap();
        let target = spectral_oracle(&spec, n, k, lambda, &psi).unwrap() + &r.pole_correction;
        let errs: Vec<f64> = r.levels.iter().map(|l| (&l.midpoint - &target).norm()).collect();
        let checked: Vec<f64> = errs.windows(2).filter(|w| w[1] > 1e-10).map(|w| w[0] / w[1]).collect();
        assert!(checked.len() >= 2, "{errs:?}");
        for ratio in checked {
            assert!(ratio >= 3.0, "{errs:?}");
        }
    }

    #[test]
    fn doubling_truncation_is_harmless() {
        let spec = diag_spec(&[0.3, 1.0, 2.2]);
        let psi = unit(3, 0) + unit(3, 2);
        let cs = ContourSpec::for_problem(&spec, 2, 1, 1.6, 2.0 * PI, QUAD_TOL).unwrap();
        let wide = ContourSpec { truncation: 2.0 * cs.truncation, ..cs };
        let a = contour_apply(&spec, 2, 1, 1.6, &psi, &cs, QUAD_TOL).unwrap();
        let b = contour_apply(&spec, 2, 1, 1.6, &psi, &wide, QUAD_TOL).unwrap();
        assert!((a.value - b.value).norm() < QUAD_TOL);
    }

    #[test]
    fn contour_rejects_bad_inputs() {
        let spec = diag_spec(&[0.3, 5.0]);
        let psi = unit(2, 0);
        let cs = ContourSpec::new(2.0 * PI, 4.0, 8, 64).unwrap();
        assert!(matches!(contour_apply(&spec, 0, 1, 1.0, &psi, &cs, QUAD_TOL), Err(Error::SpectrumNotEnclosed { .. })));
        assert!(matches!(contour_apply(&spec, 0, 0, 1.0, &psi, &cs, QUAD_TOL), Err(Error::InvalidSteepness(0))));
        assert!(matches!(contour_apply(&spec, 0, 1, -1.0, &psi, &cs, QUAD_TOL), Err(Error::NonPositiveThreshold { .. })));
        assert!(ContourSpec::new(2.0 * PI, 4.0, 4, 64).is_err());
    }

    #[test]
    fn thresholds_avoid_spectrum() {
        let spec = diag_spec(&[0.2, 0.25, 1.0, 4.0]);
        let t = spectrum_avoiding_thresholds(&spec, 4);
        assert_eq!(t, vec![2.5, 0.625, 5.0, 6.0]);
        assert!(t.iter().all(|&l| threshold_gap(&spec, l) >= MIN_THRESHOLD_GAP));
    }

    #[test]
    fn sigmoid_limit_identity() {
        let spec = hermitian_eig(&identity(2)).unwrap();
        let psi = ComplexVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)]);
        let ks: Vec<u32> = (1..=40).collect();
        let r = sigmoid_limit_check(&spec, 0, 2.0, &psi, &ks).unwrap();
        for row in &r.rows {
            let expected = 1.0 - sigmoid_real(1.0, row.k, 2.0);
            assert!((row.error - expected).abs() < 1e-15);
        }
        assert!(r.pass);
    }

    #[test]
    fn sigmoid_limit_tails() {
        let spec = diag_spec(&[0.5, 3.0]);
        let lambda = 1.5;
        for (i, gap) in [(0, 1.0), (1, 1.5)] {
            let psi = unit(2, i);
            let ks: Vec<u32> = (1..=k_max_for_gap(threshold_gap(&spec, lambda))).collect();
            let r = sigmoid_limit_check(&spec, 1, lambda, &psi, &ks).unwrap();
            let scale = spec.eigenvalues[i];
            for row in &r.rows {
                assert!(row.error <= scale * (-(row.k as f64) * gap).exp() * (1.0 + 1e-12));
            }
            assert!(r.pass && r.k0 == 1, "{r:?}");
        }
        assert!(matches!(
            sigmoid_limit_check(&spec, 0, 0.52, &unit(2, 0), &[1, 2]),
            Err(Error::ThresholdTooClose { .. })
        ));
    }
}
