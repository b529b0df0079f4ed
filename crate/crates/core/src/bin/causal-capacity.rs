use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use causal_capacity::capacity::{
    optimize_coherent_information, optimize_holevo, DEFAULT_HOLEVO_STATES, DEFAULT_MAX_ITER, DEFAULT_RESTARTS,
};
use causal_capacity::error::Error;
use causal_capacity::experiments::{self, ExperimentConfig, ReportFormat, REGISTRY};
use causal_capacity::io::{channel_to_json, load_channel, load_process, matrix_to_json};
use causal_capacity::processes::validate_pure_process;

const EXIT_CLAIM_FAILURE: u8 = 2;
const EXIT_INPUT: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

#[derive(Parser)]
#[command(name = "causal-capacity", version, about = "Channel capacities under superpositions of causal orders")]
struct Cli {
    /// RNG seed for every randomized step.
    #[arg(long, global = true, env = "CAUSAL_CAPACITY_SEED", default_value_t = 0)]
    seed: u64,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Multiplies every tolerance-type pass threshold.
    #[arg(long, global = true, default_value_t = 1.0)]
    tol_scale: f64,
    /// Include wall-clock times in JSON reports.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Run one registered experiment, or `all`.
    Reproduce { name: String },
    /// Optimize a capacity lower bound for a channel file.
    Capacity {
        #[command(subcommand)]
        kind: CapacityKind,
    },
    /// Operations on process files.
    Process {
        #[command(subcommand)]
        op: ProcessOp,
    },
    /// Check that a process file maps unitary pairs to unitaries.
    Validate {
        #[arg(long)]
        process: PathBuf,
        #[arg(long, default_value_t = 32)]
        samples: usize,
    },
    /// List registered experiments.
    List,
}

#[derive(Args)]
struct OptimizerArgs {
    #[arg(long)]
    channel: PathBuf,
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    restarts: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
    /// Keep the per-iteration history in the output.
    #[arg(long)]
    history: bool,
}

#[derive(Subcommand)]
enum CapacityKind {
    Holevo {
        #[command(flatten)]
        opt: OptimizerArgs,
        #[arg(long, default_value_t = DEFAULT_HOLEVO_STATES)]
        states: usize,
    },
    Coherent {
        #[command(flatten)]
        opt: OptimizerArgs,
    },
}

#[derive(Subcommand)]
enum ProcessOp {
    /// Induced channel of a process on two channels.
    Apply {
        #[arg(long)]
        process: PathBuf,
        #[arg(long)]
        channel_a: PathBuf,
        #[arg(long)]
        channel_b: PathBuf,
    },
}

enum Failure {
    Claim(String),
    Input(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Numerical(_) => Failure::Numerical(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

fn write_output(cli: &Cli, text: &str) -> Result<(), Failure> {
    match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json_only(cli: &Cli) -> Result<(), Failure> {
    match cli.format {
        Format::Json => Ok(()),
        Format::Csv => Err(Failure::Input("csv output is only available for `reproduce`".into())),
    }
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("json") + "\n"
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Reproduce { name } => {
            let reports = if name == "all" {
                experiments::run_all(cli.seed, cli.tol_scale)?
            } else {
                let config = ExperimentConfig { tol_scale: cli.tol_scale, ..ExperimentConfig::new(name, cli.seed) };
                vec![experiments::run_experiment(&config)?]
            };
            let format = match cli.format {
                Format::Json => ReportFormat::Json,
                Format::Csv => ReportFormat::Csv,
            };
            write_output(cli, &experiments::render_reports(&reports, format, cli.timing)?)?;
            for r in &reports {
                eprintln!("{:<24} {}", r.name, if r.pass { "pass" } else { "FAIL" });
            }
            let failed: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.name.as_str()).collect();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(Failure::Claim(format!("failed: {}", failed.join(", "))))
            }
        }
        Command::Capacity { kind } => {
            json_only(cli)?;
            let (opt, report) = match kind {
                CapacityKind::Holevo { opt, states } => {
                    let ch = load_channel(&opt.channel)?;
                    (opt, optimize_holevo(&ch, *states, opt.restarts, opt.max_iter, cli.seed)?)
                }
                CapacityKind::Coherent { opt } => {
                    let ch = load_channel(&opt.channel)?;
                    (opt, optimize_coherent_information(&ch, opt.restarts, opt.max_iter, cli.seed)?)
                }
            };
            let report = if opt.history { report } else { report.without_history() };
            write_output(cli, &pretty(&serde_json::to_value(report).expect("report")))
        }
        Command::Process { op: ProcessOp::Apply { process, channel_a, channel_b } } => {
            json_only(cli)?;
            let w = load_process(process)?;
            let induced = w.apply(&load_channel(channel_a)?, &load_channel(channel_b)?)?;
            let mut v = channel_to_json(&induced);
            v["choi"] = matrix_to_json(induced.choi_matrix());
            v["input"] = json!(induced.input().labels());
            v["output"] = json!(induced.output().labels());
            write_output(cli, &pretty(&v))
        }
        Command::Validate { process, samples } => {
            json_only(cli)?;
            let w = load_process(process)?;
            let report = validate_pure_process(&w, *samples, cli.seed)?;
            write_output(cli, &pretty(&serde_json::to_value(&report).expect("report")))?;
            if report.passed {
                Ok(())
            } else {
                Err(Failure::Claim("process failed validation".into()))
            }
        }
        Command::List => write_output(cli, &REGISTRY.iter().map(|n| format!("{n}\n")).collect::<String>()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Claim(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(EXIT_CLAIM_FAILURE)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}
