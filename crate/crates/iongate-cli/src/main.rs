use anyhow::Result;
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use iongate_cli::commands::{self, Overrides};

/// Simulator for microwave-driven two-qubit trapped-ion entangling gates
/// (MS, DDMS, SSB), with noise models, tomography and shift budgeting.
#[derive(Parser)]
#[command(name = "iongate", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output directory (default: $IONGATE_OUT_DIR or ./out).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Override the config-file random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the config-file Monte-Carlo shot count.
    #[arg(long, global = true)]
    shots: Option<u32>,

    /// Worker threads for sweeps and Monte-Carlo shots (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one gate configuration and write its time series and final-state
    /// summary.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Regenerate the data behind a named figure (fig2a, fig2b, fig3a,
    /// fig3b, fig5a, fig5b, table2).
    Figure {
        name: String,
        #[arg(long)]
        config: PathBuf,
    },
    /// Evaluate an a.c. Zeeman shift budget from a transition table.
    Zeeman {
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
    /// Sweep one parameter axis and tabulate gate error.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out_dir.clone().unwrap_or_else(|| {
        std::env::var_os("IONGATE_OUT_DIR")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("out"))
    })
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .ok(); // pool may already exist; the existing one is kept
    }
    let dir = out_dir(cli);
    let overrides = Overrides { seed: cli.seed, shots: cli.shots };
    let manifest = match &cli.command {
        Command::Simulate { config } => commands::cmd_simulate(config, &dir)?,
        Command::Figure { name, config } => commands::cmd_figure(name, config, &dir, &overrides)?,
        Command::Zeeman { table, config } => commands::cmd_zeeman(table, config, &dir)?,
        Command::Sweep { config } => commands::cmd_sweep(config, &dir, &overrides)?,
    };
    let manifest_path = manifest.finalize(&dir)?;
    println!("wrote {}", manifest_path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
