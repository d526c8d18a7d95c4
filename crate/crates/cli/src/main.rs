use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fbqec_cli::{certify, run_scenario, CliError, Scenario, ScenarioConfig};

#[derive(Parser)]
#[command(name = "fbqec", version, about = "Continuous feedback error correction scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize, certify and simulate a scenario.
    Run {
        config: PathBuf,
        /// Output directory, overriding `output` in the config.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// List the built-in scenarios.
    ListScenarios,
    /// Synthesize and certify only; prints the manifest.
    Certify { config: PathBuf },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::ListScenarios => {
            for sc in Scenario::ALL {
                println!("{:<22}{}", sc.name(), sc.description());
            }
            Ok(())
        }
        Command::Certify { config } => {
            let cfg = ScenarioConfig::load(&config)?;
            let (manifest, failure) = certify(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&manifest).expect("serializable"));
            failure.map_or(Ok(()), Err)
        }
        Command::Run { config, output } => {
            let cfg = ScenarioConfig::load(&config)?;
            let (dir, summary) = run_scenario(&cfg, output.as_deref())?;
            for run in &summary.runs {
                println!(
                    "{}: final fidelity {:.12}, leakage {:.3e}, min fidelity {:.12}",
                    run.label, run.final_fidelity, run.final_leakage, run.min_fidelity
                );
            }
            println!("wrote {}", dir.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fbqec: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
