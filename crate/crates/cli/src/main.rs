use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dressed_jc_cli::commands;
use dressed_jc_cli::config::{Profile, RunConfig};
use dressed_jc_cli::CliError;

/// Steady-state spectroscopy of a driven transmon-resonator system.
#[derive(Debug, Parser)]
#[command(name = "dressed-jc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; keys left out take profile values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory, created if missing. Overrides `[output] dir`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Sweep worker threads; 0 uses every core.
    #[arg(long, global = true, value_name = "N", default_value_t = 0)]
    workers: usize,
    /// Built-in parameter set the configuration starts from.
    #[arg(long, global = true, value_enum, default_value_t = Profile::PaperDevice)]
    profile: Profile,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Probe sweep, peak fit and photon statistics.
    Spectrum,
    /// Probe-by-coupler frequency map.
    Map2d,
    /// Splitting of the one-photon line against coupler amplitude.
    SplittingCurve,
    /// Check model invariants at the configured parameters.
    Validate,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dressed-jc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path, cli.profile)?,
        None => RunConfig::from_profile(cli.profile),
    };
    for w in &cfg.warnings {
        eprintln!("warning: {w}");
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out)
        .map_err(|e| CliError::Output(format!("{}: {e}", out.display())))?;

    let summary = match cli.command {
        Command::Spectrum => commands::spectrum(&cfg, &out, cli.workers)?,
        Command::Map2d => commands::map2d(&cfg, &out, cli.workers)?,
        Command::SplittingCurve => commands::splitting_curve(&cfg, &out, cli.workers)?,
        Command::Validate => {
            let (report, path) = commands::validate(&cfg, &out)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&report)
                    .map_err(|e| CliError::Output(e.to_string()))?
            );
            eprintln!("wrote {}", path.display());
            if !report.passed {
                let failed: Vec<&str> = report
                    .checks
                    .iter()
                    .filter(|c| !c.passed)
                    .map(|c| c.name)
                    .collect();
                return Err(CliError::Numerical(format!(
                    "failed checks: {}",
                    failed.join(", ")
                )));
            }
            return Ok(());
        }
    };
    for line in &summary.lines {
        println!("{line}");
    }
    for f in &summary.files {
        eprintln!("wrote {}", f.display());
    }
    Ok(())
}
