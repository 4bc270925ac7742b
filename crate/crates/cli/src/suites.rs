//! Per-trial execution of the verification suites.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use modlab_core::algebra::{bicommutant, commutant, is_cyclic, is_separating};
use modlab_core::contour::{
    contour_apply, convergence_rows, k_max_for_gap, spectral_oracle, spectrum_avoiding_thresholds, threshold_gap,
    sigmoid_limit_check, ContourSpec, ConvergenceRow, QUAD_TOL,
};
use modlab_core::flow::{modular_flow, relative_commutator, tomita_check};
use modlab_core::linalg::{c, frobenius, inner, op_norm, ComplexMatrix, ComplexVector, Complex64};
use modlab_core::tidy::{
    covering_windows, exponential_fit, mirrored_tidy_bound, tidy_bound, Family, TidyEngine, Window, MIN_AXIS_GAP,
};
use modlab_core::tomita::{antiunitarity_residual, modular_residuals, spectral_symmetry_residual, standard_form_delta};
use modlab_core::{generate_fixture, AlgebraModel, AlgebraSpec, Fixture};

use crate::config::{RunConfig, Suite};
use crate::report::{assemble, VerificationReport};

/// Flow sample times.
pub const FLOW_TIMES: [f64; 8] = [0.3, -0.3, 1.0, -1.0, PI, -PI, 10.0, -10.0];
/// Windows of the growth audit.
pub const AUDIT_WINDOWS: [(f64, f64); 3] = [(0.3, 0.9), (0.9, 1.5), (1.5, 2.5)];
pub const AUDIT_MAX_N: i32 = 6;
pub const LADDER_RANGE: std::ops::RangeInclusive<i32> = -3..=3;
pub const RESOLVENT_SAMPLES: usize = 200;
pub const CLOSED_FORM_TOL: f64 = 1e-10;
pub const DENSITY_TOL: f64 = 1e-9;
pub const SIGMOID_LIMIT_TOL: f64 = 1e-6;
/// Norms below this count as zero in growth fits.
pub const FIT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// One `tidy_bounds.csv` row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TidyBoundRow {
    pub seed: u64,
    pub model: String,
    pub d: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub n: i32,
    pub measured: f64,
    pub bound: f64,
    pub ratio: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitRow {
    pub lambda1: f64,
    pub lambda2: f64,
    pub slope_nonnegative: Option<f64>,
    pub slope_nonpositive: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct TrialResult {
    pub model: String,
    pub seed: u64,
    pub samples: Vec<(&'static str, Sample)>,
    pub tidy_rows: Vec<TidyBoundRow>,
    pub contour_rows: Vec<ConvergenceRow>,
    pub fits: Vec<FitRow>,
    pub errors: Vec<String>,
}

impl TrialResult {
    fn push(&mut self, id: &'static str, residual: f64, tolerance: f64) {
        self.push_flag(id, residual, tolerance, residual <= tolerance);
    }

    fn push_flag(&mut self, id: &'static str, residual: f64, tolerance: f64, pass: bool) {
        self.samples.push((id, Sample { residual, tolerance, pass }));
    }

    /// Records a failed sample for `id` and keeps the message.
    fn fail(&mut self, id: &'static str, err: impl std::fmt::Display) {
        self.push_flag(id, f64::NAN, 0.0, false);
        self.errors.push(format!("{id}: {err}"));
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    c(re, im)
}

fn random_vector(d: usize, rng: &mut ChaCha8Rng) -> ComplexVector {
    let v = ComplexVector::from_fn(d, |_, _| gaussian(rng));
    let n = v.norm();
    v.unscale(n)
}

/// Random matrix with operator norm 1.
fn random_matrix(d: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let x = ComplexMatrix::from_fn(d, d, |_, _| gaussian(rng));
    let n = op_norm(&x);
    x.unscale(n)
}

/// Random element of the span of `basis` with operator norm 1.
fn random_element(basis: &[ComplexMatrix], rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let d = basis[0].nrows();
    let x = basis.iter().fold(ComplexMatrix::zeros(d, d), |acc, b| acc + b * gaussian(rng));
    let n = op_norm(&x);
    x.unscale(n)
}

/// Seed of trial `index` for a run seeded with `seed`.
pub fn trial_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add(index as u64)
}

/// Runs every selected suite over every (model, trial) pair and assembles
/// the report. Trials run in parallel; results are merged in trial order.
pub fn run_suites(config: &RunConfig) -> anyhow::Result<VerificationReport> {
    config.validate()?;
    let tasks: Vec<(AlgebraModel, u64)> = config
        .models
        .iter()
        .flat_map(|m| (0..config.trials).map(move |i| (m.clone(), trial_seed(config.seed, i))))
        .collect();
    let trials: Vec<TrialResult> = tasks.par_iter().map(|(m, s)| run_trial(m, *s, config)).collect();
    Ok(assemble(config, trials))
}

pub fn run_trial(model: &AlgebraModel, seed: u64, config: &RunConfig) -> TrialResult {
    let mut out = TrialResult { model: model.label(), seed, ..Default::default() };
    let fixture = match generate_fixture(&AlgebraSpec { model: model.clone(), seed }, config.p_min) {
        Ok(f) => f,
        Err(e) => {
            out.fail("fixture.certification", e);
            return out;
        }
    };
    out.push("fixture.certification", 0.0, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(fixture.effective_seed ^ 0x5E_ED0F_7E57);
    let engine = match TidyEngine::new(&fixture.modular, &fixture.algebra, &fixture.commutant) {
        Ok(e) => Some(e),
        Err(e) => {
            out.errors.push(format!("tidy engine: {e}"));
            None
        }
    };
    if config.runs(Suite::Modular) {
        modular_suite(&fixture, config, &mut rng, &mut out);
    }
    if config.runs(Suite::Flow) {
        flow_suite(&fixture, engine.as_ref(), config, &mut rng, &mut out);
    }
    if let Some(e) = engine.as_ref() {
        if config.runs(Suite::Tidy) {
            tidy_suite(&fixture, e, config, &mut rng, &mut out);
        }
        if config.runs(Suite::Resolvent) {
            resolvent_suite(&fixture, e, &mut rng, &mut out);
        }
        if config.runs(Suite::Density) {
            density_suite(&fixture, e, &mut out);
        }
    } else {
        for (suite, id) in [(Suite::Tidy, "tidy.dagger_ladder"), (Suite::Resolvent, "resolvent.bound"), (Suite::Density, "density.span")] {
            if config.runs(suite) {
                out.fail(id, "no tidy engine for this fixture");
            }
        }
    }
    if config.runs(Suite::Contour) {
        contour_suite(&fixture, &mut rng, &mut out);
    }
    out
}

fn modular_suite(f: &Fixture, config: &RunConfig, rng: &mut ChaCha8Rng, out: &mut TrialResult) {
    let m = &f.modular;
    let d = f.dim();
    let tol = m.tolerance(config.tol_base);
    let (_, cyc) = is_cyclic(&f.algebra, &m.omega);
    let (_, sep) = is_separating(&f.algebra, &m.omega);
    out.push("modular.cyclic_separating", ((d - cyc.rank) + (sep.subspace_dim - sep.rank)) as f64, 0.0);
    match modular_residuals(m, &f.algebra, &f.commutant) {
        Ok(r) => {
            out.push("modular.s_fixes_omega", r.s_fixes_omega, tol);
            out.push("modular.j_fixes_omega", r.j_fixes_omega, tol);
            out.push("modular.delta_fixes_omega", r.delta_fixes_omega, tol);
            out.push("modular.polar", r.polar_s, tol);
            out.push("modular.polar_adjoint", r.polar_s_adjoint, tol);
            out.push("modular.j_delta_j", r.j_delta_j, tol);
            out.push("modular.j_involution", r.j_involution, tol);
            out.push("modular.s_involution", r.s_involution, tol);
            out.push("modular.s_on_algebra", r.s_on_algebra, tol);
            out.push("modular.s_adjoint_on_commutant", r.s_adjoint_on_commutant, tol);
        }
        Err(e) => out.fail("modular.s_fixes_omega", e),
    }
    let pairs: Vec<(ComplexVector, ComplexVector)> = (0..100).map(|_| (random_vector(d, rng), random_vector(d, rng))).collect();
    out.push("modular.j_antiunitary", antiunitarity_residual(&m.j, &pairs), 1e-10);
    out.push("modular.spectral_symmetry", spectral_symmetry_residual(m), tol);
    if let AlgebraModel::StandardFactor { n } = f.spec.model {
        match standard_form_delta(&m.omega, n) {
            Ok(closed) => out.push("modular.closed_form", frobenius(&(closed - &m.delta)) / op_norm(&m.delta), CLOSED_FORM_TOL),
            Err(e) => out.fail("modular.closed_form", e),
        }
    }
    out.push("modular.bicommutant", bicommutant(&f.algebra).mutual_residual(&f.algebra), DENSITY_TOL);
    let triple = commutant(&bicommutant(&f.algebra));
    out.push("modular.triple_commutant", triple.mutual_residual(&f.commutant), DENSITY_TOL);
}

fn flow_suite(f: &Fixture, engine: Option<&TidyEngine>, config: &RunConfig, rng: &mut ChaCha8Rng, out: &mut TrialResult) {
    let m = &f.modular;
    let tol = m.tolerance(config.tol_base);
    for a in &f.algebra.basis {
        match tomita_check(m, &f.algebra, &f.commutant, a, &FLOW_TIMES, config.tol_base) {
            Ok(rows) => {
                for r in rows {
                    out.push("flow.membership", r.membership_residual, r.tolerance);
                    out.push("flow.commutant", r.max_commutator, r.tolerance);
                }
            }
            Err(e) => out.fail("flow.membership", e),
        }
    }
    let x = random_matrix(f.dim(), rng);
    let s = rng.random_range(-10.0..10.0);
    let t = rng.random_range(-10.0..10.0);
    let group = modular_flow(m, &x, s)
        .and_then(|g| modular_flow(m, &g, t))
        .and_then(|twice| Ok(frobenius(&(twice - modular_flow(m, &x, s + t)?)) / frobenius(&x)));
    match group {
        Ok(r) => out.push("flow.group_law", r, tol),
        Err(e) => out.fail("flow.group_law", e),
    }
    match modular_flow(m, &x, t) {
        Ok(g) => {
            let r = (inner(&m.omega, &(&g * &m.omega)) - inner(&m.omega, &(&x * &m.omega))).norm() / op_norm(&x);
            out.push("flow.state_invariance", r, tol);
        }
        Err(e) => out.fail("flow.state_invariance", e),
    }
    let Some(engine) = engine else {
        out.fail("flow.integer_commutators", "no tidy engine for this fixture");
        return;
    };
    let spec = &m.delta_spec;
    let src = random_element(&f.algebra.basis, rng);
    let windows = covering_windows(spec, 2, 0.1);
    let tidy = match engine.make_tidy(&src, windows[0].lo, windows[0].hi, 0) {
        Ok(t) => t,
        Err(e) => {
            out.fail("flow.integer_commutators", e);
            return;
        }
    };
    let a = if op_norm(&tidy.a) > 0.0 { tidy.a.clone() } else { src };
    let worst = |zs: &[Complex64], id: &'static str, out: &mut TrialResult| {
        let mut r: f64 = 0.0;
        for &z in zs {
            for b in &f.commutant.basis {
                match relative_commutator(m, &a, b, z) {
                    Ok(v) => r = r.max(v),
                    Err(e) => {
                        out.fail(id, e);
                        return;
                    }
                }
            }
        }
        out.push(id, r, tol);
    };
    let integers: Vec<Complex64> = (0..=6).map(|n| c(n as f64, 0.0)).collect();
    worst(&integers, "flow.integer_commutators", out);
    let strip: Vec<Complex64> = (0..10).map(|_| c(rng.random_range(-3.0..3.0), rng.random_range(-10.0..10.0))).collect();
    worst(&strip, "flow.strip_commutators", out);
}

fn tidy_suite(f: &Fixture, e: &TidyEngine, config: &RunConfig, rng: &mut ChaCha8Rng, out: &mut TrialResult) {
    let spec = &f.modular.delta_spec;
    let full = Window { lo: spec.min_eigenvalue() / 2.0, hi: spec.max_eigenvalue() * 2.0 };
    let lower = covering_windows(spec, 2, 0.1)[0];
    let src_a = random_element(&f.algebra.basis, rng);
    let src_b = random_element(&f.algebra.basis, rng);
    let pair = e.make_tidy(&src_a, lower.lo, lower.hi, 0).and_then(|a| Ok((a, e.make_tidy(&src_b, full.lo, full.hi, 0)?)));
    match pair {
        Ok((a, b)) => {
            for n in LADDER_RANGE {
                match e.dagger_ladder_check(&a, n, config.tol_base) {
                    Ok(r) => out.push_flag("tidy.dagger_ladder", r.residual, r.tolerance, r.pass),
                    Err(err) => out.fail("tidy.dagger_ladder", err),
                }
                match e.powers_check(&a, &b, n, config.tol_base) {
                    Ok(r) => out.push_flag("tidy.powers", r.residual, r.tolerance, r.pass),
                    Err(err) => out.fail("tidy.powers", err),
                }
            }
        }
        Err(err) => out.fail("tidy.dagger_ladder", err),
    }

    let source = random_element(&f.algebra.basis, rng);
    let source_prime = random_element(&f.commutant.basis, rng);
    for (lo, hi) in AUDIT_WINDOWS {
        let window = Window { lo, hi };
        let rows = match e.growth_audit(&source, window, AUDIT_MAX_N) {
            Ok(r) => r,
            Err(err) => {
                out.fail("tidy.growth_bound", err);
                continue;
            }
        };
        for r in &rows {
            let id = match r.family {
                Family::Algebra => "tidy.growth_bound",
                Family::Commutant => "tidy.growth_bound_commutant",
            };
            out.push_flag(id, r.ratio, 1.0, r.pass);
            if r.family == Family::Algebra {
                out.tidy_rows.push(TidyBoundRow {
                    seed: out.seed,
                    model: out.model.clone(),
                    d: f.dim(),
                    lambda1: lo,
                    lambda2: hi,
                    n: r.n,
                    measured: r.measured_norm,
                    bound: r.bound_value,
                    ratio: r.ratio,
                    pass: r.pass,
                });
            }
        }
        let points = |sign: i32| -> Vec<(f64, f64)> {
            rows.iter()
                .filter(|r| r.family == Family::Algebra && r.n * sign >= 0)
                .map(|r| (r.n as f64, r.measured_norm))
                .collect()
        };
        out.fits.push(FitRow {
            lambda1: lo,
            lambda2: hi,
            slope_nonnegative: exponential_fit(&points(1), FIT_FLOOR).map(|f| f.0),
            slope_nonpositive: exponential_fit(&points(-1), FIT_FLOOR).map(|f| f.0),
        });

        let norm_prime = op_norm(&source_prime);
        for n in 0..=AUDIT_MAX_N as u32 {
            match e.one_sided(&source_prime, hi, n) {
                Ok(a) => {
                    let bound = tidy_bound(hi, n, norm_prime);
                    let measured = op_norm(&a);
                    out.push_flag("tidy.one_sided_bound", measured / bound, 1.0, measured <= bound * (1.0 + modlab_core::tidy::BOUND_SLACK));
                }
                Err(err) => out.fail("tidy.one_sided_bound", err),
            }
        }
        let norm_a = op_norm(&source);
        for n in -AUDIT_MAX_N..=0 {
            match e.one_sided_mirrored(&source, lo, n) {
                Ok(a) => {
                    let bound = mirrored_tidy_bound(lo, n, norm_a);
                    let measured = op_norm(&a);
                    out.push_flag(
                        "tidy.one_sided_bound_mirrored",
                        measured / bound,
                        1.0,
                        measured <= bound * (1.0 + modlab_core::tidy::BOUND_SLACK),
                    );
                }
                Err(err) => out.fail("tidy.one_sided_bound_mirrored", err),
            }
        }
    }
}

/// Off-axis point with `|z|` log-uniform in `[10⁻², 10²]`.
fn off_axis_point(rng: &mut ChaCha8Rng) -> Complex64 {
    loop {
        let r = 10f64.powf(rng.random_range(-2.0..2.0));
        let z = Complex64::from_polar(r, rng.random_range(0.0..2.0 * PI));
        if z.norm() - z.re > 10.0 * MIN_AXIS_GAP {
            return z;
        }
    }
}

fn resolvent_suite(f: &Fixture, e: &TidyEngine, rng: &mut ChaCha8Rng, out: &mut TrialResult) {
    for _ in 0..RESOLVENT_SAMPLES {
        let z = off_axis_point(rng);
        let a_prime = random_element(&f.commutant.basis, rng);
        match e.resolvent_transfer(&a_prime, z) {
            Ok((_, chk)) => out.push_flag("resolvent.bound", chk.ratio, 1.0, chk.pass),
            Err(err) => out.fail("resolvent.bound", err),
        }
        let a = random_element(&f.algebra.basis, rng);
        match e.resolvent_transfer_mirrored(&a, z) {
            Ok((_, chk)) => out.push_flag("resolvent.bound_mirrored", chk.ratio, 1.0, chk.pass),
            Err(err) => out.fail("resolvent.bound_mirrored", err),
        }
        match e.resolvent_transfer_same_side(&a, z) {
            Ok((_, chk)) => out.push_flag("resolvent.same_side", chk.ratio, 1.0, chk.pass),
            Err(err) => out.fail("resolvent.same_side", err),
        }
    }
}

fn density_suite(f: &Fixture, e: &TidyEngine, out: &mut TrialResult) {
    let windows = covering_windows(&f.modular.delta_spec, 3, 0.1);
    let span = e.tidy_span_check(&windows);
    out.push("density.span", span.deficit() as f64, 0.0);
    match e.tidy_bicommutant_check(&windows) {
        Ok(r) => out.push("density.bicommutant", r.mutual_residual.max(r.tidy_membership), DENSITY_TOL),
        Err(err) => out.fail("density.bicommutant", err),
    }
}

fn contour_suite(f: &Fixture, rng: &mut ChaCha8Rng, out: &mut TrialResult) {
    let spec = &f.modular.delta_spec;
    let psi = random_vector(f.dim(), rng);
    let thresholds = spectrum_avoiding_thresholds(spec, 3);
    let lambda = thresholds[0];
    for n in 0..=2u32 {
        for k in [1u32, 2, 4, 8] {
            let run = ContourSpec::for_problem(spec, n, k, lambda, 2.0 * PI, QUAD_TOL)
                .and_then(|cs| contour_apply(spec, n, k, lambda, &psi, &cs, QUAD_TOL))
                .and_then(|r| Ok((spectral_oracle(spec, n, k, lambda, &psi)?, r)));
            match run {
                Ok((oracle, r)) => {
                    let closure = (&r.value - (&oracle + &r.pole_correction)).norm();
                    out.push("contour.closure", closure, 10.0 * QUAD_TOL);
                    out.push("contour.uncorrected", (&r.value - &oracle).norm(), 10.0 * QUAD_TOL);
                    out.contour_rows.extend(convergence_rows(&r, &oracle, n, k, lambda));
                }
                Err(err) => out.fail("contour.closure", err),
            }
        }
    }
    let truncation = ContourSpec::for_problem(spec, 2, 1, lambda, 2.0 * PI, QUAD_TOL).and_then(|cs| {
        let wide = ContourSpec { truncation: 2.0 * cs.truncation, ..cs };
        let a = contour_apply(spec, 2, 1, lambda, &psi, &cs, QUAD_TOL)?;
        let b = contour_apply(spec, 2, 1, lambda, &psi, &wide, QUAD_TOL)?;
        Ok((a.value - b.value).norm())
    });
    match truncation {
        Ok(r) => out.push("contour.truncation", r, QUAD_TOL),
        Err(err) => out.fail("contour.truncation", err),
    }
    for (i, &lambda) in thresholds.iter().enumerate() {
        let ks: Vec<u32> = (1..=k_max_for_gap(threshold_gap(spec, lambda))).collect();
        match sigmoid_limit_check(spec, (i % 3) as u32, lambda, &psi, &ks) {
            Ok(r) => out.push_flag("contour.sigmoid_limit", r.final_error, SIGMOID_LIMIT_TOL, r.pass),
            Err(err) => out.fail("contour.sigmoid_limit", err),
        }
    }
}
