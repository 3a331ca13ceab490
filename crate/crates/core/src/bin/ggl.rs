use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ggl::runner::{list_scenarios, run_experiment, validate_config, RunOptions};

#[derive(Parser)]
#[command(name = "ggl", version, about = "Energy-gap experiments for perturbed Dirichlet functionals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment configuration and write CSV, markdown and manifest outputs.
    Run {
        config: PathBuf,
        /// Worker threads (defaults to the number of cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Downgrade resolution-rule violations to warnings.
        #[arg(long)]
        allow_aliasing: bool,
        /// Output directory; overrides GGL_OUT and the config's output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a configuration and list every problem found.
    Validate { config: PathBuf },
    /// Print the scenario catalog.
    ListScenarios,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, jobs, allow_aliasing, out } => {
            match run_experiment(&config, &RunOptions { jobs, allow_aliasing, out_dir: out }) {
                Ok(art) => {
                    println!("wrote {} files to {}", art.files.len(), art.out_dir.display());
                    for r in &art.outcome.reports {
                        println!("{:<24} {}", r.region, r.verdict);
                    }
                    if art.outcome.failures.is_empty() {
                        ExitCode::SUCCESS
                    } else {
                        for f in &art.outcome.failures {
                            eprintln!("failure: {f}");
                        }
                        ExitCode::from(2)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::FAILURE
                }
            }
        }
        Command::Validate { config } => {
            let issues = validate_config(&config);
            if issues.is_empty() {
                println!("{}: ok", config.display());
                ExitCode::SUCCESS
            } else {
                for i in &issues {
                    eprintln!("{}: {i}", config.display());
                }
                ExitCode::FAILURE
            }
        }
        Command::ListScenarios => {
            print!("{}", list_scenarios());
            ExitCode::SUCCESS
        }
    }
}
