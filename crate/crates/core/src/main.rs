use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bernloc::cli;

#[derive(Parser)]
#[command(name = "bernloc", version, about = "Range-only beacon localization missions")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one mission and write its artifacts.
    Run {
        config: PathBuf,
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
    },
    /// Run each seed with and without the information term.
    Compare {
        config: PathBuf,
        /// Seed list, e.g. `0..20` or `1,4,9`.
        #[arg(short, long, default_value = "0..20", value_parser = cli::parse_seeds)]
        seeds: std::vec::Vec<u64>,
        #[arg(short, long, default_value = "compare")]
        out: PathBuf,
    },
    /// Export gnuplot data files from a run directory.
    Plotdata { run_dir: PathBuf },
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { cli::EXIT_USAGE as u8 } else { 0 });
        }
    };
    let code = match args.command {
        Command::Run { config, out } => cli::cmd_run(&config, &out),
        Command::Compare { config, seeds, out } => cli::cmd_compare(&config, &seeds, &out),
        Command::Plotdata { run_dir } => cli::cmd_plotdata(&run_dir),
    };
    ExitCode::from(code as u8)
}
