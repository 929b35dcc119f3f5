use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use ccn_agg::AnalysisOptions;
use ccn_agg_cli::{cmd_analyze, cmd_compare, cmd_simulate, cmd_sweep, load_scenario, notes, CliError, OutputFormat, RunOptions, ScenarioFile};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "ccn-agg", version, about = "Interest aggregation in hierarchical caching networks: model and simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the analytical model.
    Analyze(Common),
    /// Run the event-driven simulator.
    Simulate(Common),
    /// Run both and report them side by side.
    Compare(Common),
    /// Evaluate every value of the scenario's sweep.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed; replication r uses seed + r.
    #[arg(long)]
    seed: Option<u64>,
    /// Simulation replications.
    #[arg(long)]
    replications: Option<u32>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    /// Relative convergence threshold of the model.
    #[arg(long, default_value_t = 1e-3)]
    threshold: f64,
    /// Iteration cap of the model.
    #[arg(long, default_value_t = 50)]
    max_iter: usize,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (Command::Analyze(c) | Command::Simulate(c) | Command::Compare(c) | Command::Sweep(c)) = &cli.command;
    let scenario = match &c.config {
        Some(path) => load_scenario(path)?,
        None => ScenarioFile::default(),
    };
    for note in notes(&scenario) {
        eprintln!("note: {note}");
    }
    let opts = RunOptions {
        analysis: AnalysisOptions { convergence_threshold: c.threshold, max_iterations: c.max_iter, ..Default::default() },
        seed: c.seed,
        replications: c.replications,
    };
    let table = match &cli.command {
        Command::Analyze(_) => cmd_analyze(&scenario, &opts)?,
        Command::Simulate(_) => cmd_simulate(&scenario, &opts)?,
        Command::Compare(_) => {
            let t = cmd_compare(&scenario, &opts)?;
            if let Some(d) = t.max_abs_diff("aggregation_probability") {
                eprintln!("max |model - sim| aggregation probability: {d:.4}");
            }
            t
        }
        Command::Sweep(_) => cmd_sweep(&scenario, &opts)?,
    };
    let io_err = |e: io::Error| CliError::Io(e.to_string());
    match &c.output {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
            table.write(c.format, &mut w)?;
            w.flush().map_err(io_err)
        }
        None => table.write(c.format, io::stdout().lock()),
    }
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
