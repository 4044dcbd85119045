use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dichotomy_core::scenario::commands::{
    cmd_certify, cmd_report, cmd_solve, cmd_verify, CommandOutput,
};
use dichotomy_core::scenario::report::ExitStatus;
use dichotomy_core::scenario::{Overrides, Resolved, Scenario, ScenarioError};

/// Certify, solve and verify invariant manifolds of perturbed
/// nonautonomous linear difference equations.
#[derive(Parser, Debug)]
#[command(name = "dichotomy", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute α, β, the gap check and the gates.
    Certify(RunArgs),
    /// Certify, then iterate the graph transform to a fixed point.
    Solve(RunArgs),
    /// Check invariance, decay and local-ball containment of a solved manifold.
    Verify {
        #[command(flatten)]
        run: RunArgs,
        /// Manifold file; defaults to manifold.json in the output directory.
        #[arg(long)]
        manifold: Option<PathBuf>,
    },
    /// Aggregate every run report under a directory.
    Report {
        /// Directory to scan.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Scenario TOML file, or `preset:<name>`.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory (default: out/<scenario name>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Series horizon K.
    #[arg(long)]
    horizon: Option<usize>,
    /// Seed for sampled checks.
    #[arg(long)]
    seed: Option<u64>,
    /// Solve even when the certificate is inadmissible.
    #[arg(long)]
    force: bool,
    /// Require local mode (the scenario must define radii).
    #[arg(long)]
    local: bool,
}

impl RunArgs {
    fn resolve(&self) -> Result<Resolved, ScenarioError> {
        let overrides = Overrides {
            horizon: self.horizon,
            seed: self.seed,
            force: self.force,
            local: self.local,
            out: self.out.clone(),
        };
        Scenario::load(&self.scenario)?.apply(&overrides)?.resolve()
    }
}

fn print_output(out: &CommandOutput) {
    let r = &out.report;
    if let Some(c) = &r.certificate {
        let gate = c.gate();
        println!(
            "{} [{:?}] alpha={:e} beta={:e} gate={} margin={} admissible={}",
            r.scenario, c.mode, c.alpha, c.beta, gate.value, gate.margin, c.admissible
        );
    }
    if let Some(log) = &r.convergence {
        println!(
            "iterations={} converged={} last_step={:e}",
            log.iterations,
            log.converged,
            log.steps.last().copied().unwrap_or(0.0)
        );
    }
    for res in &r.residuals {
        println!(
            "{}: max={:e} passed={}",
            res.check, res.max_value, res.passed
        );
    }
    for m in &r.messages {
        eprintln!("{m}");
    }
    for f in &out.files {
        println!("wrote {}", f.display());
    }
    println!("status: {:?}", r.status);
}

fn run(cli: Cli) -> Result<ExitStatus, ScenarioError> {
    let out = match cli.command {
        Command::Certify(a) => cmd_certify(&a.resolve()?)?,
        Command::Solve(a) => cmd_solve(&a.resolve()?)?,
        Command::Verify { run, manifold } => cmd_verify(&run.resolve()?, manifold.as_deref())?,
        Command::Report { out } => {
            let summary = cmd_report(&out)?;
            for row in &summary.rows {
                println!(
                    "{} {} {} {}",
                    row.scenario, row.command, row.status, row.file
                );
            }
            for f in &summary.files {
                println!("wrote {}", f.display());
            }
            println!("status: {:?}", summary.status);
            return Ok(summary.status);
        }
    };
    print_output(&out);
    Ok(out.status())
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors, which is reserved for gate failures
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let status = match run(cli) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            ExitStatus::ConfigError
        }
    };
    ExitCode::from(status.code() as u8)
}
