use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use highprox_cli::{config, run_command, sweep_command, verify_command, CliError};

#[derive(Parser)]
#[command(name = "highprox", version, about = "Higher-order Mirror Prox benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its trace and summary.
    Run { config: PathBuf },
    /// Run one experiment per K in solver.k_sweep and fit the rate exponent.
    Sweep { config: PathBuf },
    /// Run a property suite and print its JSON report.
    Verify { suite: String },
    /// Print the configuration JSON schema.
    Schema,
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("error: {e}");
    if let CliError::Solver { partial_trace: Some(p), .. } = e {
        eprintln!("partial trace written to {}", p.display());
    }
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match cli.command {
        Command::Run { config } => match run_command(&config) {
            Ok((trace, summary)) => {
                println!("{}\n{}", trace.display(), summary.display());
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
        Command::Sweep { config } => match sweep_command(&config) {
            Ok((table, summary)) => {
                println!("{}\n{}", table.display(), summary.display());
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
        Command::Verify { suite } => match verify_command(&suite) {
            Ok(report) => {
                print!("{report}");
                ExitCode::SUCCESS
            }
            Err((e, report)) => {
                if let Some(r) = report {
                    print!("{r}");
                }
                fail(&e)
            }
        },
        Command::Schema => {
            println!("{}", serde_json::to_string_pretty(&config::schema()).expect("schema serializes"));
            ExitCode::SUCCESS
        }
    }
}
