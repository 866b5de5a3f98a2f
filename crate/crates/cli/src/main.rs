use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;
mod output;

use config::{Overrides, RunConfig};
use error::CliError;

/// Two-fixed-center dynamics and its projection onto an ellipsoid.
#[derive(Debug, Parser)]
#[command(name = "twocenter", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the spatial problem and write `t,x,y,z,px,py,pz,J,Theta,E`.
    Simulate {
        #[command(flatten)]
        opts: Overrides,
    },
    /// Project a spatial trajectory onto the ellipsoid in the time tau.
    Project {
        /// Spatial trajectory CSV (as written by `simulate`); integrates the
        /// configured problem when absent.
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        opts: Overrides,
    },
    /// Run the conservation and equivalence checks and report PASS/FAIL.
    VerifyTheorem {
        /// Also fit G against J, E, Theta^2 and 1 at the configured a.
        #[arg(long)]
        fit: bool,
        #[command(flatten)]
        opts: Overrides,
    },
    /// Fit G ≈ λ_J J + λ_E E + λ_Θ² Θ² + λ_0 at the configured a.
    FitRelation {
        #[command(flatten)]
        opts: Overrides,
    },
    /// Convert q0 to ellipsoidal coordinates, or back with --ellipsoidal.
    Coords {
        /// `alpha,beta,theta` to convert to Cartesian.
        #[arg(long, allow_hyphen_values = true)]
        ellipsoidal: Option<String>,
        #[command(flatten)]
        opts: Overrides,
    },
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate { opts } => commands::simulate(&RunConfig::load(&opts)?),
        Command::Project { input, opts } => commands::project(&RunConfig::load(&opts)?, input.as_deref()),
        Command::VerifyTheorem { fit, opts } => commands::verify_theorem(&RunConfig::load(&opts)?, fit),
        Command::FitRelation { opts } => commands::fit_relation(&RunConfig::load(&opts)?),
        Command::Coords { ellipsoidal, opts } => commands::coords(&RunConfig::load(&opts)?, ellipsoidal.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
