//! `report.json` and the CSV artifacts.
//!
//! Floating-point values in `report.json` are written with 17 significant
//! digits; non-finite values become `null`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::ser::Serializer;
use serde::Serialize;
use serde_json::value::RawValue;

use crate::config::{RunConfig, Suite};
use crate::suites::{FitRow, Sample, TidyBoundRow, TrialResult};
use modlab_core::contour::ConvergenceRow;

pub const REPORT_SCHEMA_VERSION: &str = "1";

/// `f64` serialized as `d.dddddddddddddddde±x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            let raw = RawValue::from_string(format!("{:.16e}", self.0)).map_err(serde::ser::Error::custom)?;
            raw.serialize(s)
        } else {
            s.serialize_none()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    MustPass,
    Audit,
}

#[derive(Debug, Clone, Copy)]
pub struct CheckDef {
    pub id: &'static str,
    pub statement: &'static str,
    pub kind: Kind,
    pub suite: Option<Suite>,
}

const fn must(id: &'static str, statement: &'static str, suite: Suite) -> CheckDef {
    CheckDef { id, statement, kind: Kind::MustPass, suite: Some(suite) }
}

const fn audit(id: &'static str, statement: &'static str, suite: Suite) -> CheckDef {
    CheckDef { id, statement, kind: Kind::Audit, suite: Some(suite) }
}

/// Every check the runner can emit, in report order.
pub const CHECKS: &[CheckDef] = &[
    CheckDef {
        id: "fixture.certification",
        statement: "Ω is cyclic and separating for A",
        kind: Kind::MustPass,
        suite: None,
    },
    must("modular.cyclic_separating", "dim AΩ = dim A′Ω = d", Suite::Modular),
    must("modular.s_fixes_omega", "SΩ = Ω", Suite::Modular),
    must("modular.j_fixes_omega", "JΩ = Ω", Suite::Modular),
    must("modular.delta_fixes_omega", "ΔΩ = Ω", Suite::Modular),
    must("modular.polar", "S = JΔ^{1/2}", Suite::Modular),
    must("modular.polar_adjoint", "S* = JΔ^{-1/2}", Suite::Modular),
    must("modular.j_delta_j", "JΔJ = Δ^{-1}", Suite::Modular),
    must("modular.j_involution", "J² = 1", Suite::Modular),
    must("modular.j_antiunitary", "⟨Jψ, Jφ⟩ = ⟨φ, ψ⟩", Suite::Modular),
    must("modular.s_involution", "S² = 1", Suite::Modular),
    must("modular.s_on_algebra", "S(aΩ) = a*Ω for a ∈ A", Suite::Modular),
    must("modular.s_adjoint_on_commutant", "S*(a′Ω) = a′*Ω for a′ ∈ A′", Suite::Modular),
    must("modular.spectral_symmetry", "spec Δ is invariant under λ ↦ 1/λ", Suite::Modular),
    must("modular.closed_form", "standard form: Δ = ρ ⊗ ρ′^{-1}", Suite::Modular),
    must("modular.bicommutant", "A″ = A", Suite::Modular),
    must("modular.triple_commutant", "A‴ = A′", Suite::Modular),
    must("flow.membership", "Δ^{-it} a Δ^{it} ∈ A", Suite::Flow),
    must("flow.commutant", "[Δ^{-it} a Δ^{it}, b′] = 0", Suite::Flow),
    must("flow.group_law", "σ_s ∘ σ_t = σ_{s+t}", Suite::Flow),
    must("flow.state_invariance", "⟨Ω, Δ^{-it} x Δ^{it} Ω⟩ = ⟨Ω, xΩ⟩", Suite::Flow),
    must("flow.integer_commutators", "[Δ^{-n} a Δ^{n}, b′] = 0 for tidy a, n = 0..6", Suite::Flow),
    must("flow.strip_commutators", "[Δ^{-z} a Δ^{z}, b′] = 0 for complex z", Suite::Flow),
    must("tidy.dagger_ladder", "(a′_{n+1})*Ω = (a_n)*Ω", Suite::Tidy),
    must("tidy.powers", "Δⁿ a Δ^{-n} bΩ = a_n bΩ", Suite::Tidy),
    audit("tidy.growth_bound", "‖a_n‖ within the closed-form growth bound", Suite::Tidy),
    audit("tidy.growth_bound_commutant", "‖a′_n‖ within the closed-form growth bound", Suite::Tidy),
    audit("tidy.one_sided_bound", "‖a‖ ≤ bound for aΩ = ΔⁿΘ(λ−Δ)a′Ω", Suite::Tidy),
    audit("tidy.one_sided_bound_mirrored", "‖a′‖ ≤ mirrored bound for a′Ω = ΔⁿΘ(Δ−λ)aΩ", Suite::Tidy),
    must("resolvent.bound", "‖a‖ ≤ ‖a′‖/√(2(|z| − Re z)) for aΩ = (z − Δ)^{-1}a′Ω", Suite::Resolvent),
    must("resolvent.bound_mirrored", "‖a′‖ ≤ ‖a‖/√(2(|z| − Re z)) for a′Ω = (z − Δ^{-1})^{-1}aΩ", Suite::Resolvent),
    audit("resolvent.same_side", "source and solution both in A", Suite::Resolvent),
    must("density.span", "tidy vectors span the space", Suite::Density),
    must("density.bicommutant", "tidy operators generate A", Suite::Density),
    must("contour.closure", "contour integral = Δⁿf_k(Δ)ψ + enclosed pole terms", Suite::Contour),
    audit("contour.uncorrected", "contour integral = Δⁿf_k(Δ)ψ", Suite::Contour),
    must("contour.truncation", "doubling the truncation changes the integral by < quad_tol", Suite::Contour),
    must("contour.sigmoid_limit", "Δⁿf_k(Δ)ψ → ΔⁿΘ(λ−Δ)ψ as k → ∞", Suite::Contour),
];

pub fn check_def(id: &str) -> Option<&'static CheckDef> {
    CHECKS.iter().find(|c| c.id == id)
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub id: &'static str,
    pub paper_ref: &'static str,
    pub status: &'static str,
    /// Largest raw residual over the samples.
    pub max_residual: Num,
    /// Smallest per-sample tolerance.
    pub tolerance: Num,
    /// Largest `residual / tolerance`.
    pub worst_ratio: Num,
    pub samples: usize,
    pub violations: usize,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub audit: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub seed: u64,
    pub models: Vec<String>,
    pub trials: usize,
    pub tol_base: Num,
    pub p_min: Num,
    pub suites: Vec<Suite>,
    pub quad_tol: Num,
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthFitSummary {
    pub lambda1: Num,
    pub lambda2: Num,
    /// Fits with at least two points above the noise floor.
    pub fits: usize,
    pub mean_slope_nonnegative: Num,
    pub max_slope_nonnegative: Num,
    pub mean_slope_nonpositive: Num,
    /// `ln λ₂`, the growth rate of `Δⁿ` restricted to the window.
    pub spectral_slope: Num,
    /// `ln √(λ₂² + 4π²)`, the growth rate of the closed-form bound.
    pub bound_slope: Num,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialError {
    pub model: String,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Environment {
    pub package_version: &'static str,
    pub os: &'static str,
    pub arch: &'static str,
    pub threads: usize,
    pub generated_unix_seconds: u64,
}

impl Environment {
    pub fn capture() -> Self {
        Self {
            package_version: env!("CARGO_PKG_VERSION"),
            os: std::env::consts::OS,
            arch: std::env::consts::ARCH,
            threads: rayon::current_num_threads(),
            generated_unix_seconds: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        }
    }
}

/// Results of one run. `environment` is the only nondeterministic part and
/// is serialized last.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub schema_version: &'static str,
    pub config: ConfigEcho,
    pub checks: Vec<CheckRecord>,
    pub summary: Summary,
    pub growth_fits: Vec<GrowthFitSummary>,
    pub errors: Vec<TrialError>,
    #[serde(skip)]
    pub tidy_rows: Vec<TidyBoundRow>,
    #[serde(skip)]
    pub contour_rows: Vec<ConvergenceRow>,
    pub environment: Environment,
}

impl VerificationReport {
    pub fn must_pass_ok(&self) -> bool {
        self.summary.fail == 0
    }

    pub fn check(&self, id: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn to_json(&self) -> anyhow::Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// `report.json` with the environment block removed.
    pub fn deterministic_json(&self) -> anyhow::Result<String> {
        Ok(strip_environment(&self.to_json()?))
    }
}

/// Drops the trailing `"environment"` member of a serialized report.
pub fn strip_environment(json: &str) -> String {
    match json.rfind(",\n  \"environment\":") {
        Some(i) => json[..i].to_string(),
        None => json.to_string(),
    }
}

fn aggregate(def: &'static CheckDef, samples: &[Sample]) -> CheckRecord {
    let max_residual = samples.iter().map(|s| if s.residual.is_nan() { f64::INFINITY } else { s.residual }).fold(0.0, f64::max);
    let tolerance = samples.iter().map(|s| s.tolerance).fold(f64::INFINITY, f64::min);
    let worst_ratio = samples
        .iter()
        .map(|s| if s.residual.is_nan() { f64::INFINITY } else { s.residual / s.tolerance })
        .fold(0.0, f64::max);
    let violations = samples.iter().filter(|s| !s.pass).count();
    let status = match def.kind {
        Kind::Audit => "audit",
        Kind::MustPass if violations == 0 => "pass",
        Kind::MustPass => "fail",
    };
    CheckRecord {
        id: def.id,
        paper_ref: def.statement,
        status,
        max_residual: Num(max_residual),
        tolerance: Num(tolerance),
        worst_ratio: Num(worst_ratio),
        samples: samples.len(),
        violations,
    }
}

fn summarize_fits(fits: &[FitRow]) -> Vec<GrowthFitSummary> {
    let mut windows: Vec<(f64, f64)> = Vec::new();
    for f in fits {
        if !windows.contains(&(f.lambda1, f.lambda2)) {
            windows.push((f.lambda1, f.lambda2));
        }
    }
    windows
        .into_iter()
        .map(|(lo, hi)| {
            let rows: Vec<&FitRow> = fits.iter().filter(|f| (f.lambda1, f.lambda2) == (lo, hi)).collect();
            let pos: Vec<f64> = rows.iter().filter_map(|r| r.slope_nonnegative).collect();
            let neg: Vec<f64> = rows.iter().filter_map(|r| r.slope_nonpositive).collect();
            let mean = |v: &[f64]| if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
            GrowthFitSummary {
                lambda1: Num(lo),
                lambda2: Num(hi),
                fits: pos.len(),
                mean_slope_nonnegative: Num(mean(&pos)),
                max_slope_nonnegative: Num(pos.iter().copied().fold(f64::NAN, f64::max)),
                mean_slope_nonpositive: Num(mean(&neg)),
                spectral_slope: Num(hi.ln()),
                bound_slope: Num((hi * hi + 4.0 * std::f64::consts::PI.powi(2)).sqrt().ln()),
            }
        })
        .collect()
}

/// Merges trial results (already in trial order) into a report.
pub fn assemble(config: &RunConfig, trials: Vec<TrialResult>) -> VerificationReport {
    let mut checks = Vec::new();
    let mut summary = Summary::default();
    for def in CHECKS {
        if def.suite.is_some_and(|s| !config.runs(s)) {
            continue;
        }
        let samples: Vec<Sample> =
            trials.iter().flat_map(|t| t.samples.iter().filter(|(id, _)| *id == def.id).map(|(_, s)| *s)).collect();
        if samples.is_empty() {
            continue;
        }
        let record = aggregate(def, &samples);
        match record.status {
            "pass" => summary.pass += 1,
            "fail" => summary.fail += 1,
            _ => summary.audit += 1,
        }
        checks.push(record);
    }
    let fits: Vec<FitRow> = trials.iter().flat_map(|t| t.fits.iter().cloned()).collect();
    let errors = trials
        .iter()
        .flat_map(|t| t.errors.iter().map(|m| TrialError { model: t.model.clone(), seed: t.seed, message: m.clone() }))
        .collect();
    VerificationReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config: ConfigEcho {
            seed: config.seed,
            models: config.models.iter().map(|m| m.label()).collect(),
            trials: config.trials,
            tol_base: Num(config.tol_base),
            p_min: Num(config.p_min),
            suites: config.suites.clone(),
            quad_tol: Num(modlab_core::contour::QUAD_TOL),
        },
        checks,
        summary,
        growth_fits: summarize_fits(&fits),
        errors,
        tidy_rows: trials.iter().flat_map(|t| t.tidy_rows.iter().cloned()).collect(),
        contour_rows: trials.into_iter().flat_map(|t| t.contour_rows).collect(),
        environment: Environment::capture(),
    }
}

/// Writes `bytes` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> anyhow::Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, &target).with_context(|| format!("renaming to {}", target.display()))?;
    Ok(target)
}

fn csv_bytes<T: Serialize>(rows: &[T], header: &[&str]) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    Ok(w.into_inner()?)
}

pub const TIDY_CSV_HEADER: [&str; 10] = ["seed", "model", "d", "lambda1", "lambda2", "n", "measured", "bound", "ratio", "pass"];
pub const CONTOUR_CSV_HEADER: [&str; 8] =
    ["k", "n", "lambda", "nodes", "uncorrected_err", "corrected_err", "pole_count", "pole_norm"];

/// Writes `report.json`, `tidy_bounds.csv` and `contour_convergence.csv`.
pub fn emit(report: &VerificationReport, out_dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    Ok(vec![
        write_atomic(out_dir, "report.json", report.to_json()?.as_bytes())?,
        write_atomic(out_dir, "tidy_bounds.csv", &csv_bytes(&report.tidy_rows, &TIDY_CSV_HEADER)?)?,
        write_atomic(out_dir, "contour_convergence.csv", &csv_bytes(&report.contour_rows, &CONTOUR_CSV_HEADER)?)?,
    ])
}
