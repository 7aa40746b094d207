use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rescan_core::cli::{
    run_diagnostics, run_fuzz, run_oracle, run_scan, CliError, RunConfig, RunSummary,
};

/// Locate scattering resonances by scanning the discretized resolvent norm.
#[derive(Parser)]
#[command(name = "rescan", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan a box or a tiling and write field, flagged and cluster CSVs
    Scan(RunArgs),
    /// Square-well reference zeros in a box
    Oracle(RunArgs),
    /// Distances between flagged sets over n_list, plus the suspect report
    Diagnostics(RunArgs),
    /// Seeded matrix checks of the resolvent inequalities
    Fuzz(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat key=value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Re-run from a previous manifest.json (overridden by --config and KEY=VALUE)
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Output directory (same as out=DIR)
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Worker threads (same as workers=K; RESCAN_WORKERS wins)
    #[arg(short = 'j', long)]
    workers: Option<usize>,
    /// Configuration overrides
    #[arg(value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig, CliError> {
        let mut overrides = self.overrides.clone();
        if let Some(out) = &self.out {
            overrides.push(format!("out={}", out.display()));
        }
        if let Some(k) = self.workers {
            overrides.push(format!("workers={k}"));
        }
        RunConfig::load(self.config.as_deref(), self.manifest.as_deref(), &overrides)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Scan(a) => a.config().and_then(|c| run_scan(&c)),
        Command::Oracle(a) => a.config().and_then(|c| run_oracle(&c)),
        Command::Diagnostics(a) => a.config().and_then(|c| run_diagnostics(&c)),
        Command::Fuzz(a) => a.config().and_then(|c| run_fuzz(&c)),
    };
    match result {
        Ok(RunSummary { lines, outputs }) => {
            for line in lines {
                println!("{line}");
            }
            for path in outputs {
                println!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("rescan: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
