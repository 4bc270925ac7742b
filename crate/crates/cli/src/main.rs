use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use modlab_cli::config::{build_model, ModelKind, RunConfig, Suite};
use modlab_cli::{emit, run_suites};
use modlab_core::fixture::generate_fixture;
use modlab_core::AlgebraSpec;

/// Finite-dimensional modular theory lab.
#[derive(Parser)]
#[command(name = "modlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the verification suites and write report.json and the CSV files.
    Verify(RunArgs),
    /// Run the tidy suite only (tidy_bounds.csv and growth fits).
    AuditTidyBound(RunArgs),
    /// Run the contour suite only (contour_convergence.csv).
    ContourStudy(RunArgs),
    /// Generate one certified fixture and write it as fixture.json.
    Fixture(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Algebra model; without it both standard_factor(2) and standard_factor(3) run.
    #[arg(long, value_enum)]
    model: Option<ModelKind>,
    /// n for standard-factor, d for maximal-abelian.
    #[arg(long)]
    factor_size: Option<usize>,
    /// Direct-sum blocks, e.g. "2x2,1x1".
    #[arg(long)]
    blocks: Option<String>,
    /// Trials per model.
    #[arg(long, default_value_t = 25)]
    trials: usize,
    /// Base tolerance; checks scale it by κ^{1/2}·d.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 0.01)]
    pmin: f64,
    /// Output directory; MODLAB_OUT takes precedence.
    #[arg(long, default_value = "modlab-out")]
    out: PathBuf,
    /// Suite to run (repeatable); all when omitted.
    #[arg(long = "suite", value_enum)]
    suites: Vec<Suite>,
}

impl RunArgs {
    fn into_config(self, forced: Option<Suite>) -> anyhow::Result<RunConfig> {
        let out_dir = std::env::var_os("MODLAB_OUT").map(PathBuf::from).unwrap_or(self.out);
        let mut config = RunConfig::default_run(out_dir);
        config.seed = self.seed;
        config.trials = self.trials;
        config.tol_base = self.tol;
        config.p_min = self.pmin;
        if let Some(kind) = self.model {
            config.models = vec![build_model(kind, self.factor_size, self.blocks.as_deref())?];
        } else if let Some(n) = self.factor_size {
            config.models = vec![build_model(ModelKind::StandardFactor, Some(n), None)?];
        }
        if let Some(s) = forced {
            config.suites = vec![s];
        } else if !self.suites.is_empty() {
            config.suites = self.suites;
        }
        let config = config.normalized();
        config.validate()?;
        Ok(config)
    }
}

fn run(config: &RunConfig) -> anyhow::Result<bool> {
    let report = run_suites(config)?;
    for path in emit(&report, &config.out_dir)? {
        eprintln!("wrote {}", path.display());
    }
    for c in &report.checks {
        println!("{:<34} {:<5} max_residual={:.3e} samples={}", c.id, c.status, c.max_residual.0, c.samples);
    }
    println!("pass {} fail {} audit {}", report.summary.pass, report.summary.fail, report.summary.audit);
    Ok(report.must_pass_ok())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify(a) => a.into_config(None).and_then(|c| run(&c)),
        Command::AuditTidyBound(a) => a.into_config(Some(Suite::Tidy)).and_then(|c| run(&c)),
        Command::ContourStudy(a) => a.into_config(Some(Suite::Contour)).and_then(|c| run(&c)),
        Command::Fixture(a) => a.into_config(None).and_then(|c| {
            let spec = AlgebraSpec { model: c.models[0].clone(), seed: c.seed };
            let fixture = generate_fixture(&spec, c.p_min).context("fixture generation")?;
            let path = modlab_cli::report::write_atomic(&c.out_dir, "fixture.json", fixture.to_json()?.as_bytes())?;
            println!("{}", path.display());
            Ok(true)
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
