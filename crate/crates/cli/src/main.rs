use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ngssv_cli::{load, run_optimize, run_oracle_check, run_sweep, run_tables, CliError, CliResult, Options};

/// Phase sensitivity of an interferometer fed with coherent light and
/// heralded non-Gaussian squeezed vacuum.
#[derive(Debug, Parser)]
#[command(name = "ngssv", version)]
struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (directory for `tables`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Compute twice and fail unless both runs are byte-identical.
    #[arg(long, global = true)]
    seed_free: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimize tau at each r of a grid.
    Sweep,
    /// Jointly optimize r and tau.
    Optimize,
    /// Write the three reference tables.
    Tables,
    /// Compare closed forms with the Fock-basis oracle.
    OracleCheck {
        /// Exchange the heralding matrix roles (a control that must fail).
        #[arg(long)]
        swap_assignment: bool,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Threads("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Threads(e.to_string()))?;
    }
    let mut loaded = load(cli.config.as_deref())?;
    let opts = Options { out: cli.out, seed_free: cli.seed_free };
    match cli.command {
        Command::Sweep => {
            let path = run_sweep(&loaded, &opts)?;
            println!("wrote {}", path.display());
        }
        Command::Optimize => {
            let (path, res) = run_optimize(&loaded, &opts)?;
            println!(
                "r_opt={:.4} tau_opt={:.4} dphi={:.6e} D={:.6e} P={:.6e} R={:.6e}{}",
                res.at.r,
                res.at.tau,
                res.delta_phi,
                res.d_merit,
                res.probability,
                res.r_merit,
                if res.boundary_flag { " (tau at clamp)" } else { "" }
            );
            println!("wrote {}", path.display());
        }
        Command::Tables => {
            let (_, paths) = run_tables(&loaded, &opts)?;
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Command::OracleCheck { swap_assignment } => {
            loaded.config.oracle_check.swap_assignment |= swap_assignment;
            let (path, report) = run_oracle_check(&loaded, &opts)?;
            for (q, w) in &report.by_quantity {
                println!("{q}: {} comparisons, max abs {:.3e}, max rel {:.3e}", w.comparisons, w.max_abs, w.max_rel);
            }
            println!("wrote {}", path.display());
            if !report.passed() {
                for f in report.failures.iter().take(20) {
                    eprintln!("mismatch {f}");
                }
                return Err(CliError::Validation(format!(
                    "{} of {} oracle comparisons disagree",
                    report.failures.len(),
                    report.comparisons()
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
