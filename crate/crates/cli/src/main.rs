//! `epilattice`: command-line driver for the cluster epidemic simulations,
//! the two-species particle system and the hydrodynamic experiments.

mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

#[derive(Debug)]
pub enum CliError {
    /// Exit 2: a parameter or config file violates a precondition.
    Invalid(String),
    /// Exit 3: a run ran out of its event budget.
    Budget(String),
    Other(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Budget(_) => 3,
            CliError::Other(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Invalid(m) => write!(f, "invalid configuration: {m}"),
            CliError::Budget(m) => write!(f, "budget exceeded: {m}"),
            CliError::Other(m) => f.write_str(m),
        }
    }
}

impl From<epilattice::Error> for CliError {
    fn from(e: epilattice::Error) -> Self {
        use epilattice::Error as E;
        match e {
            E::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
            E::Io(_) | E::Csv(_) | E::Json(_) | E::CountOverflow => CliError::Other(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Survival(a) => commands::survival(a),
        Command::PhiC(a) => commands::phi_c(a),
        Command::CoupleCheck(a) => commands::couple_check(a),
        Command::TildeTable(a) => commands::tilde_table(a),
        Command::TwoSpecies(a) => commands::two_species(a),
        Command::Pde(a) => commands::pde(a),
        Command::HydroConverge(a) => commands::hydro_converge(a),
        Command::Window(a) => commands::window(a),
        Command::PhaseScan(a) => commands::phase_scan(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("epilattice: {e}");
            ExitCode::from(e.code())
        }
    }
}
