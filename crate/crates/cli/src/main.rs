//! `weakconf`: configuration-driven runner for the decay, spectral, kinetic and
//! inequality experiments.
//!
//! Exit codes: 0 pass, 1 verdict failure, 2 usage or configuration error,
//! 3 numerical failure.

mod commands;
mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use weakconf_core::rates::VerdictBundle;

use config::ExperimentConfig;
use run::{Experiment, Failure, EXIT_CONFIG, EXIT_PASS, EXIT_VERDICT};

#[derive(Parser)]
#[command(name = "weakconf", version, about = "Fokker-Planck and kinetic experiments with logarithmic confinement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decay of the macroscopic equation in the original variables.
    MacroDecay(RunArgs),
    /// Relaxation to the self-similar profile.
    SelfSimilar(RunArgs),
    /// Weighted Poincaré eigenvalues per spherical-harmonic sector.
    Spectrum(RunArgs),
    /// Phase-space run with the Lyapunov functional.
    Kinetic(RunArgs),
    /// Constants and randomized checks of the functional inequalities.
    Inequalities(RunArgs),
    /// Collects the verdicts found under the output directory.
    Report(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (TOML with INI-style sections).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration entry, e.g. `--set problem.gamma=0.4`.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,
    /// Output directory; overrides `output.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn load(&self, required: bool) -> Result<ExperimentConfig, Failure> {
        let cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None if required => return Err(Failure::Config("--config <path> is required".into())),
            None => ExperimentConfig::parse("[problem]\n[grid]\n")?,
        };
        let mut cfg = cfg.with_overrides(&self.set)?;
        if let Some(out) = &self.out {
            cfg.output.directory = out.clone();
        }
        Ok(cfg)
    }
}

fn verdict_exit(bundle: &VerdictBundle) -> i32 {
    for v in &bundle.verdicts {
        println!("{}", v.summary_line());
    }
    if bundle.is_empty() {
        println!("empty bundle: no verdicts");
        EXIT_PASS
    } else if bundle.all_pass() {
        EXIT_PASS
    } else {
        EXIT_VERDICT
    }
}

fn report(args: &RunArgs) -> Result<i32, Failure> {
    let cfg = args.load(false)?;
    let dir = &cfg.output.directory;
    if !dir.is_dir() {
        return Err(Failure::Config(format!("report directory {} does not exist", dir.display())));
    }
    let bundle = run::collect_verdicts(dir)?;
    std::fs::write(dir.join("report.json"), bundle.to_json()?).map_err(|e| Failure::Config(format!("cannot write report: {e}")))?;
    Ok(verdict_exit(&bundle))
}

fn experiment(name: &str, args: &RunArgs, exp: Experiment) -> Result<i32, Failure> {
    let cfg = args.load(true)?;
    let bundle = run::run_sweep(name, &cfg, exp)?;
    Ok(verdict_exit(&bundle))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { EXIT_PASS as u8 });
        }
    };
    let result = match &cli.command {
        Command::MacroDecay(a) => experiment("macro-decay", a, commands::macro_decay),
        Command::SelfSimilar(a) => experiment("self-similar", a, commands::self_similar),
        Command::Spectrum(a) => experiment("spectrum", a, commands::spectrum),
        Command::Kinetic(a) => experiment("kinetic", a, commands::kinetic),
        Command::Inequalities(a) => experiment("inequalities", a, commands::inequalities),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
