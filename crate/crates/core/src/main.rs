use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use memsim::config::SimConfig;
use memsim::error::SimError;
use memsim::evolution::simulate;
use memsim::operator::OperatorSpectrum;
use memsim::output;
use memsim::sweep::estimate_lambda_star;
use memsim::verify;

/// Hinged-plate MEMS simulator: coupled fourth-order plate flow with an
/// electrostatic free boundary, plus its verification harness.
#[derive(Parser)]
#[command(name = "memsim", version, about)]
struct Cli {
    /// TOML configuration file (defaults apply when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for trace.csv / summary.json / sweep.json / dumps.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for randomized verification fields.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads for concurrent sweep runs (1 = fully sequential).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single simulation and write trace.csv + summary.json.
    Simulate {
        /// Print the default configuration as TOML and exit.
        #[arg(long)]
        print_defaults: bool,
    },
    /// Bisect the pull-in threshold and write sweep.json.
    Sweep,
    /// Emit the plate-operator eigenvalue table as CSV.
    Spectrum,
    /// Run the built-in correctness checks; exit 1 on any failure.
    Verify {
        /// Smaller grids, no fine-resolution sweep rerun.
        #[arg(long)]
        quick: bool,
    },
}

fn load_config(path: &Option<PathBuf>) -> Result<SimConfig, SimError> {
    match path {
        Some(p) => SimConfig::load(p),
        None => Ok(SimConfig::default()),
    }
}

fn ensure_out(dir: &Option<PathBuf>) -> std::io::Result<PathBuf> {
    let dir = dir.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn run(cli: Cli) -> Result<ExitCode, SimError> {
    if cli.threads > 1 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .ok();
    }

    match cli.command {
        Command::Simulate { print_defaults } => {
            if print_defaults {
                print!("{}", SimConfig::default().to_toml());
                return Ok(ExitCode::SUCCESS);
            }
            let cfg = load_config(&cli.config)?;
            let p = cfg.parameters()?;
            let grid = cfg.grid()?;
            let u0 = cfg.initial_field()?;
            let trace = simulate(&u0, &p, &grid, &cfg.admissible_spec(), &cfg.run_options())?;
            let dir = ensure_out(&cli.out)?;
            output::write_trace_csv(&trace, &dir.join("trace.csv"))?;
            output::write_summary_json(&trace, &dir.join("summary.json"))?;
            eprintln!(
                "simulate: {:?} after {} samples -> {}",
                trace.status,
                trace.samples.len(),
                dir.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep => {
            let cfg = load_config(&cli.config)?;
            let p = cfg.parameters()?;
            let grid = cfg.grid()?;
            let u0 = cfg.initial_field()?;
            let result = estimate_lambda_star(
                &u0,
                &p,
                &grid,
                &cfg.admissible_spec(),
                &cfg.run_options(),
                (cfg.sweep.lambda_lo, cfg.sweep.lambda_hi),
                cfg.sweep.tol,
                cfg.sweep.prescan,
            )?;
            let dir = ensure_out(&cli.out)?;
            output::write_sweep_json(&result, &dir.join("sweep.json"))?;
            eprintln!(
                "sweep: lambda* in [{:.4}, {:.4}] after {} runs -> {}",
                result.lambda_lo,
                result.lambda_hi,
                result.history.len(),
                dir.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Spectrum => {
            let cfg = load_config(&cli.config)?;
            let p = cfg.parameters()?;
            let grid = cfg.grid()?;
            let spec = OperatorSpectrum::new(grid.plate, &p);
            let csv = output::spectrum_csv(&spec);
            if let Some(dir) = &cli.out {
                std::fs::create_dir_all(dir)?;
                std::fs::write(dir.join("spectrum.csv"), &csv)?;
            } else {
                print!("{csv}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { quick } => {
            let cfg = load_config(&cli.config)?;
            let dump_dir = if cfg.output.write_fields {
                Some(ensure_out(&cli.out)?)
            } else {
                None
            };
            let outcomes = verify::run_all(quick, cli.seed, dump_dir.as_deref());
            let mut all_ok = true;
            for c in &outcomes {
                println!(
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
                all_ok &= c.passed;
            }
            Ok(if all_ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            // configuration and range problems are usage errors
            match e {
                SimError::InvalidParameter { .. } | SimError::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
