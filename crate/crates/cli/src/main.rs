use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use varprop::circuit::export_text;
use varprop_cli::{parse_config, Experiment, RunError};

#[derive(Parser)]
#[command(name = "varprop", version, about = "Variational product-formula experiments")]
struct Cli {
    /// log progress to stderr
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its CSV table
    Run {
        config: PathBuf,
        /// output file; overrides the config's `output`, stdout if neither is set
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write the gate program of the configured Ising ansatz
    EmitCircuit {
        config: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

enum Failure {
    Config(String),
    Solver(String),
    Io(String),
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Config(_) => Self::Config(e.to_string()),
            RunError::Solver { .. } => Self::Solver(e.to_string()),
        }
    }
}

fn load(path: &Path) -> Result<Experiment, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let cfg = parse_config(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    Ok(Experiment::new(cfg)?)
}

fn write_out(path: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    let res = match path {
        Some(p) => fs::write(p, bytes).map_err(|e| format!("{}: {e}", p.display())),
        None => io::stdout().write_all(bytes).map_err(|e| e.to_string()),
    };
    res.map_err(Failure::Io)
}

fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run { config, output } => {
            let exp = load(&config)?;
            let table = exp.run()?;
            let path = output.or_else(|| exp.config().output.clone());
            write_out(path.as_deref(), table.to_csv_string().as_bytes())
        }
        Command::EmitCircuit { config, output } => {
            let exp = load(&config)?;
            let program = exp.circuit()?;
            write_out(output.as_deref(), export_text(&program).as_bytes())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose {
            log::LevelFilter::Info
        } else {
            log::LevelFilter::Warn
        })
        .init();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("solver failure: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("i/o error: {msg}");
            ExitCode::from(1)
        }
    }
}
