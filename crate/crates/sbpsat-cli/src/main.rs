mod commands;
mod config;

use clap::{Parser, Subcommand};
use config::ExperimentConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "sbpsat", version, about = "SBP-SAT wave equation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check SBP identities and the borrowing inequality for each order.
    VerifyOps(Args),
    /// Smallest eigenvalues of the interface stability matrices.
    InterfaceEigs(Args),
    /// Largest eigenvalue of the semidiscrete system.
    Spectrum(Args),
    /// Manufactured-solution convergence study.
    Converge(Args),
    /// Generate and export a mesh.
    Mesh(Args),
    /// One manufactured-solution run with energy, error and amplitude logs.
    Solve(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Experiment definition (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<bool, String> {
    let (name, args) = match &cli.command {
        Command::VerifyOps(a) => ("verify-ops", a),
        Command::InterfaceEigs(a) => ("interface-eigs", a),
        Command::Spectrum(a) => ("spectrum", a),
        Command::Converge(a) => ("converge", a),
        Command::Mesh(a) => ("mesh", a),
        Command::Solve(a) => ("solve", a),
    };
    let (cfg, text) = match &args.config {
        Some(p) => ExperimentConfig::load(p).map_err(|e| e.to_string())?,
        None => (ExperimentConfig::default(), String::new()),
    };
    let out = args.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out).map_err(|e| format!("cannot create {}: {e}", out.display()))?;
    if !text.is_empty() {
        sbpsat::io::write_atomic(out.join("config.toml"), text.as_bytes()).map_err(|e| e.to_string())?;
    }
    let outcome = match cli.command {
        Command::VerifyOps(_) => commands::verify_ops(&cfg, &out),
        Command::InterfaceEigs(_) => commands::interface_eigs(&cfg, &out),
        Command::Spectrum(_) => commands::spectrum_cmd(&cfg, &out),
        Command::Converge(_) => commands::converge(&cfg, &out),
        Command::Mesh(_) => commands::mesh_cmd(&cfg, &out),
        Command::Solve(_) => commands::solve(&cfg, &out),
    }
    .map_err(|e| format!("{name}: {e}"))?;
    for n in &outcome.notes {
        println!("{n}");
    }
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    println!("{name}: {}", if outcome.passed { "ok" } else { "checks failed" });
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
