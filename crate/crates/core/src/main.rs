use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ris_thz::harness::{
    load_scenarios, parse_grid, run_single, run_sweep, write_csv_file, HarnessError, SweepParam,
    SweepSpec, DEFAULT_SAMPLES, DEFAULT_SEED,
};
use ris_thz::params::{ConfigEntries, SystemConfig};

#[derive(Parser)]
#[command(name = "ris-thz", version, about = "Ergodic capacity of active-RIS-aided THz links")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunOpts {
    /// Key-value config file.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Channel draws per estimate.
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    /// Worker threads (default: all cores). Does not change results.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the ergodic capacity of one configuration.
    Simulate {
        #[command(flatten)]
        run: RunOpts,
    },
    /// Sweep one parameter over a grid for a set of scenarios and write CSV.
    Sweep {
        #[command(flatten)]
        run: RunOpts,
        /// rho_db, num_elements, quant_bits, beta, phi or zeta.
        #[arg(long, default_value = "rho_db")]
        param: String,
        /// start:stop:step or v1,v2,...
        #[arg(long, default_value = "-20:30:2", allow_hyphen_values = true)]
        grid: String,
        /// Preset (fig2, quantization, base) or scenario file.
        #[arg(long, default_value = "fig2")]
        scenarios: String,
        #[arg(long)]
        output: PathBuf,
    },
}

fn with_threads<T: Send>(
    threads: Option<usize>,
    job: impl FnOnce() -> Result<T, HarnessError> + Send,
) -> Result<T, HarnessError> {
    match threads {
        None => job(),
        Some(0) => Err(HarnessError::Usage("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| HarnessError::Usage(e.to_string()))?
            .install(job),
    }
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Simulate { run } => {
            let cfg = SystemConfig::from_file(&run.config)?;
            let result = with_threads(run.threads, || run_single(&cfg, run.seed, run.samples))?;
            print!("{}", result.report());
        }
        Command::Sweep {
            run,
            param,
            grid,
            scenarios,
            output,
        } => {
            let base = ConfigEntries::from_file(&run.config)?;
            let spec = SweepSpec {
                parameter: param.parse::<SweepParam>()?,
                values: parse_grid(&grid)?,
                scenarios: load_scenarios(&scenarios)?,
            };
            let rows = with_threads(run.threads, || run_sweep(&base, &spec, run.seed, run.samples))?;
            write_csv_file(&rows, &output)?;
            eprintln!("wrote {} rows to {}", rows.len(), output.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
