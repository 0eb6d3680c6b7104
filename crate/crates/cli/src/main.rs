//! `ddvv-forge`: builds and certifies DDVV-equality submanifolds from a
//! JSON run configuration.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 for
//! configuration and input errors.

mod commands;
mod config;
mod summary;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use commands::{Context, Failure};
use config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    /// Check that the curve is isotropic on the grid's (u, v) nodes.
    Isotropy,
    /// Evaluate the construction and write the sample file.
    Build,
    /// Check DDVV equality at every regular sample.
    Verify,
    /// Check the canonical shape-operator form at every regular sample.
    Canonical,
    /// Apply the configured ambient map, then check equality and the shape law.
    Transform,
    /// Classify <<G, G>> and check austerity after the matching map.
    Quadric,
    /// Write the holomorphic inversion of the curve and check it.
    InvertHolo,
    /// Compare the associated pair of the inverted construction with T_d G.
    AssociatedPair,
    /// List the built-in curves.
    Catalog,
}

#[derive(Debug, Parser)]
#[command(name = "ddvv-forge", version, about = "Construct and certify submanifolds attaining DDVV equality")]
struct Cli {
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the output path of the command's main artifact.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    workers: Option<usize>,
    /// Overrides the grid jitter seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let stdout = std::io::stdout();
    if cli.command == Command::Catalog {
        commands::catalog(cli.out.as_deref(), &mut stdout.lock())?;
        return Ok(true);
    }
    let Some(path) = cli.config else {
        return Err(Failure::Input("--config <path> is required for this command".into()));
    };
    let mut cfg = RunConfig::load(&path)?;
    if let Some(seed) = cli.seed {
        cfg.grid.seed = seed;
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = cli.workers {
        if k == 0 {
            return Err(Failure::Input("--workers must be at least 1".into()));
        }
        pool = pool.num_threads(k);
    }
    let pool = pool.build().map_err(|e| Failure::Input(e.to_string()))?;
    let ctx = Context { cfg, out: cli.out, pool };
    let summary = match cli.command {
        Command::Isotropy => commands::isotropy(&ctx)?,
        Command::Build => commands::build(&ctx)?,
        Command::Verify => commands::verify(&ctx)?,
        Command::Canonical => commands::canonical(&ctx)?,
        Command::Transform => commands::transform(&ctx)?,
        Command::Quadric => commands::quadric(&ctx)?,
        Command::InvertHolo => commands::invert_holo(&ctx)?,
        Command::AssociatedPair => commands::associated_pair(&ctx)?,
        Command::Catalog => unreachable!("handled above"),
    };
    let mut lock = stdout.lock();
    summary.print(&mut lock).and_then(|_| lock.flush()).map_err(|e| Failure::Input(e.to_string()))?;
    Ok(summary.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("ddvv-forge: {e}");
            ExitCode::from(2)
        }
    }
}
