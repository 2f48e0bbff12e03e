use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use isoperim_cli::{init_threads, run, Command, Format, RunConfig, EXIT_USAGE};

/// Numerical isoperimetry for one-dimensional log-concave measures and their products.
#[derive(Debug, Parser)]
#[command(name = "isoperim", version)]
struct Args {
    /// profile | hardy | beta | verify-spi | verify-beckner | verify-fsobolev | semigroup | product
    command: String,

    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,

    /// Directory for tables, reports and plot data.
    #[arg(long, default_value = ".")]
    out: PathBuf,

    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,

    /// Overrides the output format in the config (csv or json).
    #[arg(long)]
    format: Option<String>,
}

fn execute(args: Args) -> Result<i32, isoperim_cli::CliError> {
    init_threads()?;
    let command: Command = args.command.parse()?;
    let mut config = RunConfig::load(&args.config, Some(command))?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(f) = &args.format {
        config.format = f.parse::<Format>()?;
    }
    let outcome = run(&config, &args.out)?;
    for line in &outcome.summary {
        println!("{line}");
    }
    for path in &outcome.artifacts {
        println!("wrote {}", path.display());
    }
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match execute(args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
