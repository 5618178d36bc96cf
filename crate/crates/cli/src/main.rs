use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use drgossip_core::harness::{self, ExperimentConfig, SweepAxis};

#[derive(Parser)]
#[command(
    name = "drgossip",
    about = "Decentralized distributionally robust learning simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed of a config and write per-seed CSVs, a summary and metadata.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// `--key=value` or `key=value` overrides, e.g. `--alpha=0.01 hyper.rounds=500`.
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Run one config per value along an axis and write a comparison table.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// alpha | compression | topology | T
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Run the property suites.
    Check,
    /// Print the version.
    Version,
}

fn load(config: &PathBuf, overrides: &[String]) -> drgossip_core::Result<ExperimentConfig> {
    let text =
        std::fs::read_to_string(config).map_err(|e| drgossip_core::Error::io_at(config, e))?;
    let overrides = overrides
        .iter()
        .map(|o| harness::parse_override(o))
        .collect::<drgossip_core::Result<Vec<_>>>()?;
    ExperimentConfig::parse_with_overrides(&text, &overrides)
}

fn execute(cmd: Command) -> drgossip_core::Result<i32> {
    match cmd {
        Command::Run { config, overrides } => {
            let cfg = load(&config, &overrides)?;
            let art = harness::cmd_run(&cfg)?;
            println!("wrote {}", art.dir.display());
            for m in &art.summary {
                println!(
                    "{:<11} {:.4} ± {:.4} ({} seeds)",
                    m.metric, m.mean, m.std, m.seeds
                );
            }
            Ok(harness::EXIT_OK)
        }
        Command::Sweep {
            config,
            axis,
            values,
            overrides,
        } => {
            let cfg = load(&config, &overrides)?;
            let axis: SweepAxis = axis.parse()?;
            let values: Vec<String> = values
                .split(',')
                .map(str::trim)
                .filter(|v| !v.is_empty())
                .map(String::from)
                .collect();
            let dir = harness::cmd_sweep(&cfg, axis, &values)?;
            println!("wrote {}", dir.join("comparison.csv").display());
            Ok(harness::EXIT_OK)
        }
        Command::Check => {
            let report = harness::run_checks();
            print!("{}", report.render());
            let total: f64 = report.suites.iter().map(|s| s.elapsed.as_secs_f64()).sum();
            println!("total {total:.2} s");
            Ok(if report.passed() {
                harness::EXIT_OK
            } else {
                harness::EXIT_CHECK
            })
        }
        Command::Version => {
            println!("drgossip {}", drgossip_core::VERSION);
            Ok(harness::EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            harness::exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
