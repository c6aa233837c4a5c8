//! Command-line front end: run configurations, result documents and exit codes.
//!
//! Exit status is 0 when the task passes, 1 on a theorem or engine failure
//! and 2 on a hypothesis failure or an unusable config.

mod config;
mod run;

use std::path::PathBuf;

use clap::Parser;

pub use config::{
    parse_config, FamilySection, ManifoldSection, NumericsSection, OutputSection, ResolvedConfig,
    RunConfig, SweepParameter, Task, DEFAULT_LAMBDAS, DEFAULT_LENGTHS, DEFAULT_SPACING,
};
pub use run::{run, ResultDocument, RunOutcome, Status, Timings};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "CALLIAS_OUT_DIR";
pub const FALLBACK_OUT_DIR: &str = "callias-out";

#[derive(Debug, Clone, Parser)]
#[command(name = "callias", version, about = "Index and spectral flow of Dirac-Schrodinger operators on 1-D manifolds")]
pub struct Args {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output root; overrides the config and the environment.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the family seed and the ensemble master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Write eigenvalue branches as CSV next to the result.
    #[arg(long)]
    pub emit_branches: bool,
}

/// Output root: `--out`, then the config, then the environment, then a fallback.
pub fn output_root(args_out: Option<&PathBuf>, config: &RunConfig) -> PathBuf {
    args_out
        .cloned()
        .or_else(|| config.output.dir.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(FALLBACK_OUT_DIR))
}

/// Parses, runs and reports; returns the process exit status.
pub fn main_with(args: Args) -> i32 {
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return 2;
        }
    };
    let mut resolved = match parse_config(&text) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return 2;
        }
    };
    if let Some(seed) = args.seed {
        resolved = resolved.with_seed(seed);
    }
    let root = output_root(args.out.as_ref(), &resolved.config);
    let go = || run(&resolved, &root, args.emit_branches);
    let outcome = match args.jobs {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(go),
            Err(e) => {
                eprintln!("error: thread pool: {e}");
                return 1;
            }
        },
        None => go(),
    };
    match outcome {
        Ok(o) => {
            println!("{:?} -> {}", o.status, o.document_path.display());
            if let Some(err) = &o.document.error {
                eprintln!("{err}");
            }
            o.status.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
