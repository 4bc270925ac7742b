//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use modlab_cli::config::{RunConfig, Suite};
use modlab_cli::report::{emit, strip_environment, VerificationReport};
use modlab_cli::run_suites;
use modlab_core::AlgebraModel;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn config(models: Vec<AlgebraModel>, trials: usize, suites: &[Suite], seed: u64) -> RunConfig {
    RunConfig {
        seed,
        models,
        trials,
        tol_base: 1e-9,
        p_min: 0.01,
        out_dir: std::env::temp_dir(),
        suites: suites.to_vec(),
    }
    .normalized()
}

fn standard_pair() -> Vec<AlgebraModel> {
    vec![AlgebraModel::StandardFactor { n: 2 }, AlgebraModel::StandardFactor { n: 3 }]
}

/// All listed checks present, passing, with at least `min_samples` samples each.
fn all_pass(report: &VerificationReport, ids: &[&str], min_samples: usize) -> Outcome {
    let mut worst: f64 = 0.0;
    for id in ids {
        let Some(c) = report.check(id) else {
            return outcome(false, format!("{id} missing"));
        };
        if c.status != "pass" {
            return outcome(false, format!("{id}: {} violations, worst ratio {:.3e}", c.violations, c.worst_ratio.0));
        }
        if c.samples < min_samples {
            return outcome(false, format!("{id}: only {} samples", c.samples));
        }
        worst = worst.max(c.worst_ratio.0);
    }
    outcome(true, format!("worst residual/tolerance {worst:.3e}"))
}

fn criterion_1() -> Outcome {
    let models = vec![
        AlgebraModel::StandardFactor { n: 2 },
        AlgebraModel::StandardFactor { n: 3 },
        AlgebraModel::MaximalAbelian { d: 4 },
        AlgebraModel::MaximalAbelian { d: 5 },
        AlgebraModel::MaximalAbelian { d: 6 },
        AlgebraModel::DirectSum { blocks: vec![(2, 2), (1, 1)] },
    ];
    let start = Instant::now();
    let report = run_suites(&config(models, 17, &[Suite::Modular], 101)).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let fixtures = report.check("fixture.certification").map_or(0, |c| c.samples);
    let ids = [
        "fixture.certification",
        "modular.s_fixes_omega",
        "modular.j_fixes_omega",
        "modular.delta_fixes_omega",
        "modular.polar",
        "modular.polar_adjoint",
        "modular.j_delta_j",
        "modular.s_on_algebra",
        "modular.s_adjoint_on_commutant",
    ];
    let o = all_pass(&report, &ids, 100);
    outcome(o.pass && fixtures >= 100 && elapsed < 60.0, format!("{fixtures} fixtures in {elapsed:.1} s, {}", o.detail))
}

fn criterion_2(main: &VerificationReport) -> Outcome {
    all_pass(main, &["modular.closed_form"], 25)
}

fn criterion_3(main: &VerificationReport) -> Outcome {
    // 8 times × dim A per fixture; 50 fixtures with dim A ∈ {4, 9}
    let o = all_pass(main, &["flow.membership", "flow.commutant"], 50 * 8 * 4);
    let times = modlab_cli::suites::FLOW_TIMES.len();
    outcome(o.pass && times == 8, format!("{times} times per basis element, {}", o.detail))
}

fn criterion_4() -> Outcome {
    let models = vec![
        AlgebraModel::StandardFactor { n: 2 },
        AlgebraModel::StandardFactor { n: 3 },
        AlgebraModel::MaximalAbelian { d: 4 },
        AlgebraModel::DirectSum { blocks: vec![(2, 2), (1, 1)] },
    ];
    let report = run_suites(&config(models, 5, &[Suite::Resolvent], 404)).unwrap();
    let o = all_pass(&report, &["resolvent.bound", "resolvent.bound_mirrored"], 4 * 5 * 200);
    let n = report.check("resolvent.bound").map_or(0, |c| c.samples);
    outcome(o.pass, format!("{n} off-axis samples, {}", o.detail))
}

fn criterion_5(main: &VerificationReport) -> Outcome {
    all_pass(main, &["tidy.dagger_ladder", "tidy.powers"], 50 * 7)
}

fn criterion_6(main: &VerificationReport) -> Outcome {
    all_pass(main, &["density.span", "density.bicommutant"], 25)
}

fn criterion_7(main: &VerificationReport) -> Outcome {
    all_pass(main, &["contour.sigmoid_limit"], 25 * 3)
}

fn criterion_8(main: &VerificationReport, dir: &Path) -> Outcome {
    let o = all_pass(main, &["contour.closure"], 50 * 12);
    let csv = std::fs::read_to_string(dir.join("contour_convergence.csv")).unwrap_or_default();
    let header_ok = csv.lines().next() == Some("k,n,lambda,nodes,uncorrected_err,corrected_err,pole_count,pole_norm");
    let mut combos = BTreeSet::new();
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        combos.insert((f[0].to_string(), f[1].to_string()));
    }
    let uncorrected = main.check("contour.uncorrected").map(|c| c.status == "audit" && c.samples > 0).unwrap_or(false);
    outcome(
        o.pass && header_ok && combos.len() == 12 && uncorrected,
        format!("{} (n, k) combinations tabulated, uncorrected audit recorded, {}", combos.len(), o.detail),
    )
}

fn criterion_9(main: &VerificationReport, dir: &Path) -> Outcome {
    let mut reader = csv::Reader::from_path(dir.join("tidy_bounds.csv")).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    let expected = ["seed", "model", "d", "lambda1", "lambda2", "n", "measured", "bound", "ratio", "pass"];
    let mut rows = 0;
    let mut ns = BTreeSet::new();
    let mut windows = BTreeSet::new();
    let mut complete = true;
    for rec in reader.records() {
        let rec = rec.unwrap();
        rows += 1;
        ns.insert(rec[5].parse::<i32>().unwrap());
        windows.insert((rec[3].to_string(), rec[4].to_string()));
        complete &= rec[6].parse::<f64>().is_ok() && rec[7].parse::<f64>().is_ok() && rec[8].parse::<f64>().is_ok();
        complete &= matches!(&rec[9], "true" | "false");
    }
    let slopes = main.growth_fits.iter().filter(|g| g.mean_slope_nonnegative.0.is_finite()).count();
    let pass = header == expected
        && rows >= 500
        && ns == (-6..=6).collect::<BTreeSet<_>>()
        && windows.len() == 3
        && complete
        && main.growth_fits.len() == 3
        && slopes == 3;
    let violations = main.check("tidy.growth_bound").map_or(0, |c| c.violations);
    outcome(pass, format!("{rows} rows, {} windows, {slopes} fitted slopes, {violations} rows above the bound (audit)", windows.len()))
}

fn criterion_10() -> Outcome {
    let cfg = config(standard_pair(), 3, &Suite::ALL, 7);
    let a = run_suites(&cfg).unwrap();
    let b = run_suites(&cfg).unwrap();
    let da = tempfile::tempdir().unwrap();
    let db = tempfile::tempdir().unwrap();
    emit(&a, da.path()).unwrap();
    emit(&b, db.path()).unwrap();
    let read = |p: &Path| std::fs::read_to_string(p.join("report.json")).unwrap();
    let same_report = strip_environment(&read(da.path())) == strip_environment(&read(db.path()));
    let same_csv = ["tidy_bounds.csv", "contour_convergence.csv"]
        .iter()
        .all(|f| std::fs::read(da.path().join(f)).unwrap() == std::fs::read(db.path().join(f)).unwrap());

    let bin = env!("CARGO_BIN_EXE_modlab");
    let out = tempfile::tempdir().unwrap();
    let run = |tol: &str| {
        Command::new(bin)
            .args(["verify", "--trials", "2", "--suite", "modular", "--tol", tol, "--seed", "3"])
            .env("MODLAB_OUT", out.path())
            .output()
            .unwrap()
            .status
            .code()
    };
    let ok_code = run("1e-9");
    let fail_code = run("1e-30");
    let pass = same_report && same_csv && ok_code == Some(0) && fail_code == Some(1);
    outcome(
        pass,
        format!("identical outputs: {}, exit codes {ok_code:?} (passing run) and {fail_code:?} (failing run)", same_report && same_csv),
    )
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let main_report = run_suites(&config(standard_pair(), 25, &Suite::ALL, 1)).unwrap();
    emit(&main_report, dir.path()).unwrap();

    let results = [
        ("modular identities", criterion_1()),
        ("closed-form modular operator", criterion_2(&main_report)),
        ("modular flow preserves A", criterion_3(&main_report)),
        ("resolvent bound", criterion_4()),
        ("dagger ladder and powers", criterion_5(&main_report)),
        ("tidy density", criterion_6(&main_report)),
        ("sigmoid limit", criterion_7(&main_report)),
        ("residue closure", criterion_8(&main_report, dir.path())),
        ("growth bound audit", criterion_9(&main_report, dir.path())),
        ("determinism and exit code", criterion_10()),
    ];
    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        println!("{} criterion {:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
