use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod output;

use commands::{ContractArgs, ConvergeArgs, EvolveArgs, ExpansionArgs, ProfileArgs, WeightArgs};

#[derive(Debug, Parser)]
#[command(name = "fdx", version, about = "Singular self-similar profiles of the fast diffusion equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a profile and write it on its s-grid.
    Profile(ProfileArgs),
    /// Check the origin expansion, equation residuals and the inversion.
    Expansion(ExpansionArgs),
    /// Tabulate the superharmonic weight.
    Weight(WeightArgs),
    /// Evolve self-similar (optionally perturbed) data and track the error.
    Evolve(EvolveArgs),
    /// Weighted L1 distances between random sandwiched pairs.
    Contract(ContractArgs),
    /// Distance of the rescaled solution to the limiting profile.
    Converge(ConvergeArgs),
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(fdx::Error),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "ConfigError",
            CliError::Core(e) => e.kind(),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => e.exit_code() as u8,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<fdx::Error> for CliError {
    fn from(e: fdx::Error) -> Self {
        CliError::Core(e)
    }
}

fn fail(err: &CliError) -> ExitCode {
    let record = serde_json::json!({
        "error": err.kind(),
        "message": err.to_string(),
        "exit_code": err.exit_code(),
    });
    eprintln!("{record}");
    ExitCode::from(err.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&CliError::Config(e.to_string().trim().to_string())),
    };
    let run = match cli.command {
        Command::Profile(a) => commands::profile(a),
        Command::Expansion(a) => commands::expansion(a),
        Command::Weight(a) => commands::weight(a),
        Command::Evolve(a) => commands::evolve(a),
        Command::Contract(a) => commands::contract(a),
        Command::Converge(a) => commands::converge(a),
    };
    match run.and_then(|(dir, artifacts)| artifacts.write_to(&dir).map(|_| (dir, artifacts))) {
        Ok((dir, artifacts)) => {
            println!("wrote {} to {}", artifacts.names().join(", "), dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}
