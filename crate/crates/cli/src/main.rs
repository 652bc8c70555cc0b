use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use korn_cli::{CliError, RunConfig, Status};

#[derive(Parser)]
#[command(name = "korn", version, about = "Optimal Korn constants of thin shells")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Output directory; overrides `output` in the configuration.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<(RunConfig, PathBuf), CliError> {
        let config = RunConfig::load(&self.config)?;
        let out = self.out.clone().unwrap_or_else(|| config.output.clone());
        Ok((config, out))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Geometry and identity checks on the configured patch.
    Verify(Common),
    /// Trial-field ratio sweep.
    Ansatz(Common),
    /// One eigensolve at the first grid point.
    Korn {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        allow_unresolved: bool,
        /// Directory for sparse triplet dumps of the assembled matrices.
        #[arg(long)]
        dump_matrices: Option<PathBuf>,
    },
    /// Solver sweep over the configured grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        allow_unresolved: bool,
    },
    /// Fits and theory comparison for an existing sweep CSV.
    Report {
        /// Sweep CSV.
        #[arg(short, long)]
        input: PathBuf,
        /// Configuration of the sweep, for the curvature class and `eps0`.
        #[arg(short, long)]
        config: Option<PathBuf>,
        /// Output directory; defaults to the directory of the input.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<Status, CliError> {
    korn_cli::init_threads()?;
    match cli.command {
        Command::Verify(common) => {
            let (config, out) = common.load()?;
            let (report, path) = korn_cli::run_verify(&config, &out)?;
            println!("[verify] {} passed, {} failed -> {}", report.passed, report.failed, path.display());
            for c in report.checks.iter().filter(|c| !c.pass) {
                println!("  FAIL {} lhs={:.6e} rhs={:.6e} residual={:.3e}", c.name, c.lhs, c.rhs, c.residual);
            }
            Ok(if report.failed == 0 { Status::Success } else { Status::CheckFailure })
        }
        Command::Ansatz(common) => {
            let (config, out) = common.load()?;
            let outcome = korn_cli::run_ansatz(&config, &out)?;
            print_sweep("ansatz", &outcome);
            Ok(Status::Success)
        }
        Command::Korn { common, allow_unresolved, dump_matrices } => {
            let (config, out) = common.load()?;
            let (r, path) = korn_cli::run_korn(&config, &out, allow_unresolved, dump_matrices.as_deref())?;
            println!(
                "[korn] h={} epsilon={} C1={:.6e} residual={:.2e} iterations={} -> {}",
                r.h,
                r.epsilon,
                r.c1,
                r.residual,
                r.iterations,
                path.display()
            );
            Ok(if r.converged { Status::Success } else { Status::NotConverged })
        }
        Command::Sweep { common, allow_unresolved } => {
            let (config, out) = common.load()?;
            let outcome = korn_cli::run_sweep(&config, &out, allow_unresolved)?;
            print_sweep("sweep", &outcome);
            if outcome.non_converged > 0 {
                eprintln!("[sweep] {} points did not converge", outcome.non_converged);
                return Ok(Status::NotConverged);
            }
            Ok(Status::Success)
        }
        Command::Report { input, config, out } => {
            let config = config.map(|p| RunConfig::load(&p)).transpose()?;
            let out = out.unwrap_or_else(|| input.parent().map(PathBuf::from).unwrap_or_default());
            let (report, path) = korn_cli::run_report(&input, config.as_ref(), &out)?;
            for g in &report.groups {
                print_group(g);
            }
            println!("[report] -> {}", path.display());
            Ok(Status::Success)
        }
    }
}

fn print_group(g: &korn_cli::report::GroupReport) {
    match &g.fit {
        Some(f) => println!(
            "  {} {} {}: slope {:.4} [{:.4}, {:.4}] over {} rows",
            g.source, g.patch, g.bc_mode, f.slope, f.slope_ci.0, f.slope_ci.1, f.points
        ),
        None => println!("  {} {} {}: no fit ({})", g.source, g.patch, g.bc_mode, g.fit_error.as_deref().unwrap_or("-")),
    }
    for t in &g.theory {
        if let Some(s) = t.slope {
            println!("    theory {} slope {:.4}", t.regime, s);
        }
    }
    for n in &g.notes {
        println!("    note: {n}");
    }
}

fn print_sweep(name: &str, outcome: &korn_cli::SweepOutcome) {
    for r in &outcome.rows {
        println!("[{name}] h={:.6e} epsilon={:.6e} C1={:.6e} residual={:.2e}", r.h, r.epsilon, r.c1, r.residual);
    }
    for g in &outcome.report.groups {
        print_group(g);
    }
    if let Some(p) = &outcome.artifacts.csv {
        println!("[{name}] -> {}", p.display());
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(status) => ExitCode::from(status.code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.status.code() as u8)
        }
    }
}
