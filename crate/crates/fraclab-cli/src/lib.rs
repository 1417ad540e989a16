//! Command-line runner for the fraclab verification experiments.
//!
//! Each subcommand runs a fixed group of acceptance criteria, writes one CSV per
//! table into the output directory and reports PASS/FAIL per criterion.
//! Exit status: 0 when every check passes, 1 on a tolerance failure, 2 on a
//! configuration or input error.

pub mod config;
pub mod experiments;
pub mod output;

use clap::{Parser, Subcommand};
use std::path::PathBuf;

/// Environment variable selecting the worker thread count.
pub const THREADS_ENV: &str = "FRACLAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "fraclab", version, about = "Spectral fractional Laplacian verification experiments")]
pub struct Cli {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override a config key, e.g. `--set dnmap.modes=24` (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Output directory for CSV files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for randomized fixtures.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Only report failures.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Forward operators: kernel of constants, Poisson equivalence, integration by parts, Born series.
    Solve,
    /// Quadratic Frechet remainder of the DN map.
    Dnmap,
    /// Alessandrini identity for the linearized DN map.
    Linearize,
    /// Fourier reconstruction of the potential.
    Reconstruct,
    /// Logarithmic stability sweep.
    Stability,
    /// CGO amplitude recursions and conjugated residuals.
    Cgo,
    /// Gauge identity, psi decomposition, stationary phase, trace relations.
    Gauge,
    /// Every criterion.
    VerifyAll,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Dnmap => "dnmap",
            Command::Linearize => "linearize",
            Command::Reconstruct => "reconstruct",
            Command::Stability => "stability",
            Command::Cgo => "cgo",
            Command::Gauge => "gauge",
            Command::VerifyAll => "verify-all",
        }
    }
}

pub const EXIT_PASS: u8 = 0;
pub const EXIT_TOLERANCE: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;

/// Runs a parsed command line and returns the exit status.
pub fn run(cli: &Cli) -> u8 {
    let mut overrides = cli.set.clone();
    if let Some(seed) = cli.seed {
        overrides.push(format!("seed={seed}"));
    }
    let cfg = match config::load(cli.config.as_deref(), &overrides) {
        Ok(mut c) => {
            if let Some(out) = &cli.out {
                c.out = out.clone();
            }
            c
        }
        Err(e) => {
            eprintln!("fraclab: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("fraclab: {e}");
        return EXIT_CONFIG;
    }
    let sub = cli.command.name();
    let hash = output::config_hash(&cfg.canonical());
    let mut status = EXIT_PASS;
    for c in experiments::criteria_for(sub) {
        let start = std::time::Instant::now();
        let outcome = match (c.run)(&cfg) {
            Ok(o) => o,
            Err(e) => {
                eprintln!("fraclab: criterion {}: {e}", c.id);
                return EXIT_CONFIG;
            }
        };
        if let Err(e) = output::write_outcome(&cfg.out, sub, &hash, cfg.seed, &outcome) {
            eprintln!("fraclab: writing {}: {e}", cfg.out.display());
            return EXIT_CONFIG;
        }
        let secs = start.elapsed().as_secs_f64();
        if outcome.passed() {
            if !cli.quiet {
                println!("PASS criterion {:>2} {} ({}) [{secs:.1}s]", c.id, outcome.title, outcome.summary);
            }
        } else {
            status = EXIT_TOLERANCE;
            println!("FAIL criterion {:>2} {} ({}) [{secs:.1}s]", c.id, outcome.title, outcome.summary);
            for f in outcome.failing() {
                println!("  failed check: {} : {}", f.name, f.detail);
            }
        }
    }
    status
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| format!("{THREADS_ENV}={v} is not a thread count"))?;
    if n == 0 {
        return Err(format!("{THREADS_ENV} must be positive"));
    }
    // A second call in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}
