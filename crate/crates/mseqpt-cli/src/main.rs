//! Command-line driver: runs configured tomography experiments and exports
//! the 2-design state set.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 for numerical
//! validation failures, 1 for I/O problems.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mseqpt::config::ExperimentConfig;
use mseqpt::design::build_mub_design;
use mseqpt::error::Error;
use mseqpt::report;

#[derive(Parser)]
#[command(
    name = "mseqpt",
    about = "Selective quantum process tomography on a simulated two-qubit spectrometer",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a tomography experiment and write its reports
    Run(RunArgs),
    /// Export a MUB-derived 2-design state set as JSON
    Design(DesignArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat key-value config file; flags below override file keys
    #[arg(long)]
    config: Option<PathBuf>,
    /// Channel name (noop | cnot | ch | cnot-textbook | ch-textbook |
    /// depolarizing:p | phase-damping:p[:q] | amplitude-damping:g[:q])
    #[arg(long)]
    channel: Option<String>,
    /// Protocol: mseqpt | qpt | seqpt
    #[arg(long)]
    protocol: Option<String>,
    /// Elements to estimate: "full" or "a,b;a,b" pairs
    #[arg(long)]
    elements: Option<String>,
    /// Backend: ideal | shots | gaussian
    #[arg(long)]
    backend: Option<String>,
    /// Shots per readout (shots backend)
    #[arg(long)]
    shots: Option<u64>,
    /// Noise width (gaussian backend)
    #[arg(long)]
    sigma: Option<f64>,
    /// Root RNG seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for report files
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    /// Output format: json | csv | both
    #[arg(long)]
    format: Option<String>,
    /// Also write the backend expectation cache as cache.csv
    #[arg(long)]
    export_cache: bool,
}

#[derive(Args)]
struct DesignArgs {
    /// Hilbert-space dimension (2 or 4)
    #[arg(long, default_value_t = 4)]
    dimension: usize,
    /// Output file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Design(args) => design(args),
    }
}

fn run(args: RunArgs) -> ExitCode {
    let mut config = match &args.config {
        Some(path) => match ExperimentConfig::from_file(path) {
            Ok(config) => config,
            Err(err) => {
                eprintln!("config error: {err}");
                return ExitCode::from(2);
            }
        },
        None => ExperimentConfig::default(),
    };

    let overrides: Vec<(&str, Option<String>)> = vec![
        ("channel", args.channel),
        ("protocol", args.protocol),
        ("elements", args.elements),
        ("backend", args.backend),
        ("shots", args.shots.map(|v| v.to_string())),
        ("sigma", args.sigma.map(|v| v.to_string())),
        ("seed", args.seed.map(|v| v.to_string())),
        (
            "out_dir",
            args.out_dir.map(|p| p.to_string_lossy().into_owned()),
        ),
        ("format", args.format),
    ];
    for (key, value) in overrides {
        if let Some(value) = value {
            if let Err(err) = config.apply_key(key, &value) {
                eprintln!("config error: {err}");
                return ExitCode::from(2);
            }
        }
    }
    if args.export_cache {
        config.export_cache = true;
    }

    match report::run(&config) {
        Ok(report) => {
            println!(
                "protocol {} on channel '{}' ({} backend, seed {})",
                report.protocol, report.channel, config.backend.as_str(), report.seed
            );
            match report.fidelity {
                Some(f) => println!(
                    "fidelity {f:.9} (projected {:.9}, clipped {:.3e})",
                    report.fidelity_projected.unwrap_or(f),
                    report.projection_clipped
                ),
                None => println!("estimated {} selected elements", report.partial_elements.len()),
            }
            println!(
                "resources: {} preparations, {} readouts",
                report.ledger.preparations, report.ledger.readouts
            );
            println!("outputs written to {}", config.out_dir.display());
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            exit_code_for(&err)
        }
    }
}

fn design(args: DesignArgs) -> ExitCode {
    let set = match build_mub_design(args.dimension) {
        Ok(set) => set,
        Err(err) => {
            eprintln!("config error: {err}");
            return ExitCode::from(2);
        }
    };
    let json = serde_json::to_string_pretty(&set.export()).expect("design export serializes");
    match &args.out {
        Some(path) => {
            if let Err(err) = std::fs::write(path, json) {
                eprintln!("error: {err}");
                return ExitCode::from(1);
            }
            println!("wrote {} states to {}", set.len(), path.display());
        }
        None => {
            // Tolerate a closed pipe (e.g. `mseqpt design | head`).
            let mut stdout = std::io::stdout().lock();
            if let Err(err) = writeln!(stdout, "{json}") {
                if err.kind() != std::io::ErrorKind::BrokenPipe {
                    eprintln!("error: {err}");
                    return ExitCode::from(1);
                }
            }
        }
    }
    ExitCode::SUCCESS
}

fn exit_code_for(err: &Error) -> ExitCode {
    match err {
        Error::Config(_) => ExitCode::from(2),
        Error::Io(_) => ExitCode::from(1),
        _ => ExitCode::from(3),
    }
}
