use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use subwave_cli::config::{load_config, ExperimentConfig};
use subwave_cli::run;

/// Capacitance-matrix workbench for subwavelength resonances of sphere
/// systems: boundary-element capacitance matrices, linear resonance
/// asymptotics, and nonlinear (Kerr-type) resonance branches.
#[derive(Parser)]
#[command(name = "subwave", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the mesh refinement of the configuration.
    #[arg(long)]
    refinement: Option<u32>,
    /// Override the rng seed of the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the capacitance matrices C and Cgen with a refinement ladder.
    Capmat(CommonArgs),
    /// Compute linear resonance asymptotics per mode of Cgen.
    Linear(CommonArgs),
    /// Sweep and trace nonlinear resonance branches.
    Branches(CommonArgs),
    /// Run the three bundled dimer configurations and check the results.
    ReproduceFigures {
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Override the mesh refinement of the bundled configurations.
        #[arg(long)]
        refinement: Option<u32>,
        /// Override the rng seed of the bundled configurations.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load(args: &CommonArgs) -> Result<ExperimentConfig, run::WorkbenchError> {
    let mut cfg = load_config(&args.config)?;
    if let Some(r) = args.refinement {
        cfg.refinement = r;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<(), run::WorkbenchError> {
    match cli.command {
        Command::Capmat(args) => {
            let cfg = load(&args)?;
            let cap = run::run_capmat(&cfg, &args.out)?;
            println!("capacitance matrix ({0}x{0}) written to {1}", cap.c.nrows(), args.out.display());
        }
        Command::Linear(args) => {
            let cfg = load(&args)?;
            let lin = run::run_linear(&cfg, &args.out)?;
            for m in &lin.modes {
                println!(
                    "mode {}: lambda = {:.6}{:+.6}i, omega0 = {:.6}{:+.6}i",
                    m.mode, m.lambda.re, m.lambda.im, m.omega0.re, m.omega0.im
                );
            }
        }
        Command::Branches(args) => {
            let cfg = load(&args)?;
            let out = run::run_branches(&cfg, &args.out)?;
            println!(
                "{} branches ({} sweep failures) written to {}",
                out.branches.len(),
                out.sweep.failed_starts,
                args.out.display()
            );
        }
        Command::ReproduceFigures {
            out,
            refinement,
            seed,
        } => {
            let report = run::reproduce_figures(&out, refinement, seed)?;
            for check in &report.checks {
                println!(
                    "{}: {} [{}] {}",
                    if check.pass { "pass" } else { "FAIL" },
                    check.name,
                    check.config,
                    check.detail
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
