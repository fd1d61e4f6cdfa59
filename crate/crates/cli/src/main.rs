use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use intraphoton::config::{validate_config, ExperimentConfig};
use intraphoton::scenario::{run_scenario, write_output, RunOptions, Scenario};
use intraphoton::Error;

/// Simulate polarization–OAM Bell experiments on single photons.
#[derive(Parser)]
#[command(name = "intraphoton", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Coincidence counts versus delay.
    HomDip(RunArgs),
    /// Coincidence fringes versus the OAM analyzer angle.
    Fringes(RunArgs),
    /// S versus the standard-set angle θ.
    ChshTheta(RunArgs),
    /// S versus delay at fixed θ.
    ChshVsDelay(RunArgs),
    /// Repeated sampled S at the headline setting.
    Headline(RunArgs),
    /// Run a scenario by name.
    Run {
        name: String,
        #[command(flatten)]
        args: RunArgs,
    },
    /// Check a config file and print a JSON report.
    ValidateConfig { path: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    /// TOML config; the built-in default is used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, env = "INTRAPHOTON_OUT_DIR", default_value = "out")]
    out_dir: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Write expectation values instead of sampled counts.
    #[arg(long)]
    noiseless: bool,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::UnknownScenario(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

fn load(path: Option<&Path>) -> Result<ExperimentConfig, Error> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::shipped_default()),
    }
}

fn run(scenario: Scenario, args: &RunArgs) -> Result<(), Error> {
    let config = load(args.config.as_deref())?;
    let opts = RunOptions {
        noiseless: args.noiseless,
        seed: args.seed,
    };
    let output = run_scenario(scenario, &config, opts)?;
    let (csv, meta) = write_output(&output, &args.out_dir)?;
    println!("wrote {} ({} rows)", csv.display(), output.table.rows.len());
    println!("wrote {}", meta.display());
    for (key, value) in &output.summary {
        println!("  {key} = {value:.6}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::HomDip(a) => run(Scenario::HomDip, a),
        Command::Fringes(a) => run(Scenario::Fringes, a),
        Command::ChshTheta(a) => run(Scenario::ChshTheta, a),
        Command::ChshVsDelay(a) => run(Scenario::ChshVsDelay, a),
        Command::Headline(a) => run(Scenario::Headline, a),
        Command::Run { name, args } => name.parse().and_then(|sc| run(sc, args)),
        Command::ValidateConfig { path } => match validate_config(path) {
            Ok(report) => {
                println!("{}", report.to_json());
                if report.ok {
                    Ok(())
                } else {
                    return ExitCode::from(EXIT_CONFIG);
                }
            }
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
