use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use magweyl::harness::{self, ConfigError, RunConfig};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    VerifyAlgebra,
    BuildKernel,
    Suite,
}

/// Magnetic Weyl calculus on nilpotent Lie groups: verification suites and
/// kernel construction.
#[derive(Debug, Parser)]
#[command(name = "magweyl", version)]
struct Cli {
    command: Command,
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config, defaults to `magweyl-out`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated suite names; overrides the config.
    #[arg(long, value_delimiter = ',')]
    suites: Option<Vec<String>>,
    /// Worker threads; falls back to MAGWEYL_THREADS.
    #[arg(long, env = "MAGWEYL_THREADS")]
    threads: Option<usize>,
}

fn run(cli: Cli) -> Result<bool, ConfigError> {
    let mut cfg = RunConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.suites.is_some() {
        cfg.suites = cli.suites;
    }
    let out = cli.out.or_else(|| cfg.out.as_ref().map(|p| cfg.base_dir.join(p))).unwrap_or_else(|| "magweyl-out".into());
    let io_err = |source| ConfigError::Io { path: out.clone(), source };
    match cli.command {
        Command::VerifyAlgebra | Command::Suite => {
            let report = match cli.command {
                Command::VerifyAlgebra => harness::verify_algebra(&cfg)?,
                _ => harness::run_suites(&cfg)?,
            };
            report.write(&out).map_err(io_err)?;
            for c in &report.checks {
                let value = c.value.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "nan".into());
                println!("{:<5} {:<36} {value:>10}  (tol {:.1e})", if c.pass { "PASS" } else { "FAIL" }, c.check, c.tolerance);
            }
            println!("{}", if report.pass { "overall: PASS" } else { "overall: FAIL" });
            Ok(report.pass)
        }
        Command::BuildKernel => {
            let meta = harness::build_kernel(&cfg, &out)?;
            println!("{} sha256 {}", out.join(&meta.dump).display(), meta.sha256);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("magweyl: cannot set thread count: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("magweyl: {e}");
            ExitCode::from(2)
        }
    }
}
